use once_cell::sync::Lazy;
use regex::Regex;

use super::PromptError;

static SLOT: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"\[([A-Z][A-Za-z]*(?: [A-Za-z]+)*)\]").expect("slot pattern"));

/// A prompt text with `[Slot Name]` markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Template {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! template {
    ($ident:ident, $file:literal) => {
        pub const $ident: Template = Template {
            name: $file,
            text: include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/templates/", $file)),
        };
    };
}

template!(DESCRIPTION, "description.txt");
template!(P1_STRATEGY, "p1_strategy.txt");
template!(P2_RULES, "p2_rules.txt");
template!(P3_CODE, "p3_code.txt");
template!(CODE_INSTRUCTIONS, "code_instructions.txt");
template!(REPAIR, "repair.txt");
template!(P4_HISTORY, "p4_history.txt");
template!(P4_CURRENT, "p4_current.txt");
template!(P4_WINDOW, "p4_window.txt");
template!(P4_PREVIOUS, "p4_previous.txt");
template!(P4_BEST, "p4_best.txt");
template!(P4_INSTRUCTION, "p4_instruction.txt");
template!(P4_INVALID, "p4_invalid.txt");

pub const ALL: [Template; 13] = [
    DESCRIPTION,
    P1_STRATEGY,
    P2_RULES,
    P3_CODE,
    CODE_INSTRUCTIONS,
    REPAIR,
    P4_HISTORY,
    P4_CURRENT,
    P4_WINDOW,
    P4_PREVIOUS,
    P4_BEST,
    P4_INSTRUCTION,
    P4_INVALID,
];

impl Template {
    /// Slot names in order of appearance.
    pub fn slots(&self) -> Vec<&'static str> {
        SLOT.captures_iter(self.text)
            .map(|c| c.get(1).expect("group").as_str())
            .collect()
    }

    /// Substitutes every slot in one pass over the template text; inserted
    /// values are never rescanned. A slot without a value is an error.
    pub fn fill(&self, values: &[(&str, &str)]) -> Result<String, PromptError> {
        let body = self.text.strip_suffix('\n').unwrap_or(self.text);
        let mut out = String::with_capacity(body.len() * 2);
        let mut last = 0;
        for caps in SLOT.captures_iter(body) {
            let whole = caps.get(0).expect("match");
            let name = &caps[1];
            let value = values
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| PromptError::UnresolvedSlot {
                    template: self.name,
                    slot: name.to_string(),
                })?;
            out.push_str(&body[last..whole.start()]);
            out.push_str(value);
            last = whole.end();
        }
        out.push_str(&body[last..]);
        Ok(out)
    }
}
