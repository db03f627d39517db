use serde::{Deserialize, Serialize};

use crate::corpus::Label;

pub const ANSWER_GENERAL: &str = "GENERAL";
pub const ANSWER_ZOMBIE: &str = "ZOMBIE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    General,
    Zombie,
    Unparseable,
}

impl Verdict {
    /// `Unparseable` maps to `Unlabeled`, which evaluation scores as a miss.
    pub fn to_label(self) -> Label {
        match self {
            Verdict::General => Label::General,
            Verdict::Zombie => Label::Zombie,
            Verdict::Unparseable => Label::Unlabeled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub label: Verdict,
    pub raw_response: String,
}

/// Scan the response for the two answer tokens as whole words, ignoring
/// case. Exactly one of them appearing (any number of times) decides the
/// verdict; neither or both is `Unparseable`.
pub fn parse_verdict(response_text: &str) -> JudgeVerdict {
    let mut general = false;
    let mut zombie = false;
    for word in response_text.split(|c: char| !c.is_alphanumeric()) {
        if word.eq_ignore_ascii_case(ANSWER_GENERAL) {
            general = true;
        } else if word.eq_ignore_ascii_case(ANSWER_ZOMBIE) {
            zombie = true;
        }
    }
    let label = match (general, zombie) {
        (true, false) => Verdict::General,
        (false, true) => Verdict::Zombie,
        _ => Verdict::Unparseable,
    };
    JudgeVerdict {
        label,
        raw_response: response_text.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(parse_verdict("ZOMBIE").label, Verdict::Zombie);
        assert_eq!(parse_verdict("the reply is coherent → GENERAL").label, Verdict::General);
        let v = parse_verdict("maybe");
        assert_eq!(v.label, Verdict::Unparseable);
        assert_eq!(v.raw_response, "maybe");
    }

    #[test]
    fn case_and_punctuation() {
        assert_eq!(parse_verdict("Answer: zombie.").label, Verdict::Zombie);
        assert_eq!(parse_verdict("**General**").label, Verdict::General);
        assert_eq!(parse_verdict("ZOMBIE\nZOMBIE").label, Verdict::Zombie);
    }

    #[test]
    fn conflicts_and_near_misses() {
        assert_eq!(parse_verdict("GENERAL, not ZOMBIE").label, Verdict::Unparseable);
        assert_eq!(parse_verdict("zombies everywhere").label, Verdict::Unparseable);
        assert_eq!(parse_verdict("generally fine").label, Verdict::Unparseable);
        assert_eq!(parse_verdict("").label, Verdict::Unparseable);
    }

    #[test]
    fn to_label() {
        assert_eq!(Verdict::Unparseable.to_label(), Label::Unlabeled);
        assert_eq!(Verdict::Zombie.to_label(), Label::Zombie);
    }

    proptest! {
        #[test]
        fn total_and_deterministic(s in "\\PC{0,80}") {
            let a = parse_verdict(&s);
            prop_assert_eq!(&a, &parse_verdict(&s));
            prop_assert_eq!(a.raw_response, s);
        }

        #[test]
        fn single_token_in_noise_is_found(pre in "[a-z ]{0,20}", post in "[a-z ]{0,20}", z in any::<bool>()) {
            prop_assume!(!pre.contains("general") && !pre.contains("zombie"));
            prop_assume!(!post.contains("general") && !post.contains("zombie"));
            let tok = if z { "Zombie" } else { "GENERAL" };
            let v = parse_verdict(&format!("{pre} {tok} {post}"));
            prop_assert_eq!(v.label, if z { Verdict::Zombie } else { Verdict::General });
        }
    }
}
