use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::object::CATEGORIES;
use crate::task::{Subgoal, SubgoalType, TaskTemplate};
use crate::world::World;

/// Separator between the goal statement and the step instruction when the
/// agent consumes them as one sequence.
pub const SEP_TOKEN: &str = "[SEP]";

fn goal_templates(template: TaskTemplate) -> &'static [&'static str] {
    match template {
        TaskTemplate::PickAndPlace => &[
            "put a {obj} on the {recep}",
            "move a {obj} to the {recep}",
            "place a {obj} on the {recep}",
        ],
        TaskTemplate::CleanAndPlace => &[
            "put a clean {obj} on the {recep}",
            "wash a {obj} and put it on the {recep}",
            "rinse a {obj} and place it on the {recep}",
        ],
        TaskTemplate::HeatAndPlace => &[
            "put a heated {obj} on the {recep}",
            "heat a {obj} and put it on the {recep}",
            "warm up a {obj} and place it on the {recep}",
        ],
        TaskTemplate::CoolAndPlace => &[
            "put a chilled {obj} on the {recep}",
            "cool a {obj} and put it on the {recep}",
            "chill a {obj} and place it on the {recep}",
        ],
        TaskTemplate::SliceAndPlace => &[
            "slice a {obj} and put the knife on the {recep}",
            "cut up a {obj} and leave the knife on the {recep}",
            "slice a {obj} then place the knife on the {recep}",
        ],
        TaskTemplate::Examine => &[
            "look at the {obj} under the light of the {recep}",
            "examine the {obj} by the light of the {recep}",
            "hold the {obj} and turn on the {recep}",
        ],
    }
}

fn step_templates(kind: SubgoalType) -> &'static [&'static str] {
    match kind {
        SubgoalType::GotoLocation => &[
            "go to the {obj}",
            "walk over to the {obj}",
            "head to the {obj}",
            "move to the {obj}",
        ],
        SubgoalType::PickupObject => &[
            "pick up the {obj}",
            "grab the {obj}",
            "take the {obj}",
        ],
        SubgoalType::PutObject => &[
            "put the {obj} on the {recep}",
            "place the {obj} on the {recep}",
            "set the {obj} on the {recep}",
        ],
        SubgoalType::CleanObject => &[
            "wash the {obj} in the sink",
            "rinse the {obj} under the water",
            "clean the {obj} in the sink",
        ],
        SubgoalType::HeatObject => &[
            "heat the {obj} with the {recep}",
            "warm the {obj} with the {recep}",
            "cook the {obj} with the {recep}",
        ],
        SubgoalType::CoolObject => &[
            "chill the {obj} in the fridge",
            "cool the {obj} in the fridge",
            "let the {obj} get cold in the fridge",
        ],
        SubgoalType::SliceObject => &[
            "slice the {obj} with the knife",
            "cut the {obj} with the knife",
            "cut up the {obj}",
        ],
        SubgoalType::ToggleObject => &[
            "turn on the {obj}",
            "switch on the {obj}",
            "flip the {obj} on",
        ],
    }
}

fn fill(template: &str, obj: &str, recep: Option<&str>) -> Vec<String> {
    let mut text = template.replace("{obj}", obj);
    if let Some(r) = recep {
        text = text.replace("{recep}", r);
    }
    assert!(
        !text.contains('{'),
        "unfilled placeholder in template {template:?}"
    );
    text.split_whitespace().map(str::to_string).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedInstructions {
    pub goal: Vec<String>,
    pub steps: Vec<Vec<String>>,
}

/// Render the goal statement and one instruction per subgoal from the fixed
/// phrase bank; template choice is seeded, so (task, seed) is deterministic.
pub fn render_instructions(
    world: &World,
    template: TaskTemplate,
    subgoals: &[Subgoal],
    seed: u64,
) -> RenderedInstructions {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1757_ce0d_6a0f_11aa);
    let token = |id: usize| world.objects[id].category.token();

    // Goal parameters: the object the task is about and the receptacle it
    // ends at (the lamp, for Examine).
    let pickup_obj = subgoals
        .iter()
        .find(|s| s.kind == SubgoalType::PickupObject)
        .map(|s| s.arg);
    let (goal_obj, goal_recep) = match template {
        TaskTemplate::SliceAndPlace => {
            let slice = subgoals
                .iter()
                .find(|s| s.kind == SubgoalType::SliceObject)
                .expect("slice task has a slice subgoal");
            let put = subgoals
                .iter()
                .rfind(|s| s.kind == SubgoalType::PutObject)
                .expect("slice task ends with put");
            (slice.arg, put.aux.expect("put has receptacle"))
        }
        TaskTemplate::Examine => {
            let toggle = subgoals
                .iter()
                .find(|s| s.kind == SubgoalType::ToggleObject)
                .expect("examine task toggles");
            (pickup_obj.expect("examine task picks up"), toggle.arg)
        }
        _ => {
            let put = subgoals
                .iter()
                .rfind(|s| s.kind == SubgoalType::PutObject)
                .expect("placement task ends with put");
            (pickup_obj.expect("placement task picks up"), put.aux.expect("put has receptacle"))
        }
    };

    let bank = goal_templates(template);
    let goal = fill(
        bank[rng.gen_range(0..bank.len())],
        token(goal_obj),
        Some(token(goal_recep)),
    );

    let steps = subgoals
        .iter()
        .map(|sg| {
            let bank = step_templates(sg.kind);
            let chosen = bank[rng.gen_range(0..bank.len())];
            let recep = sg.aux.map(token);
            fill(chosen, token(sg.arg), recep)
        })
        .collect();

    RenderedInstructions { goal, steps }
}

/// Every token the phrase bank can emit, sorted and deduplicated. This is
/// the closed vocabulary; `vocab.txt` is its committed form.
pub fn compute_vocabulary() -> Vec<String> {
    let mut words: Vec<String> = Vec::new();
    let mut add_bank = |bank: &[&str]| {
        for template in bank {
            for w in template.split_whitespace() {
                if !w.starts_with('{') {
                    words.push(w.to_string());
                }
            }
        }
    };
    for t in [
        TaskTemplate::PickAndPlace,
        TaskTemplate::CleanAndPlace,
        TaskTemplate::HeatAndPlace,
        TaskTemplate::CoolAndPlace,
        TaskTemplate::SliceAndPlace,
        TaskTemplate::Examine,
    ] {
        add_bank(goal_templates(t));
    }
    for k in crate::task::SUBGOAL_TYPES {
        add_bank(step_templates(k));
    }
    for c in CATEGORIES {
        words.push(c.token().to_string());
    }
    words.push(SEP_TOKEN.to_string());
    words.sort_unstable();
    words.dedup();
    words
}

/// Closed vocabulary with stable token ids (sorted order).
#[derive(Debug, Clone)]
pub struct Vocab {
    tokens: Vec<String>,
}

impl Vocab {
    /// The committed vocabulary file, compiled in.
    pub fn builtin() -> Self {
        let tokens = include_str!("../vocab.txt")
            .lines()
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        Self { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token_id(&self, token: &str) -> Option<usize> {
        self.tokens.binary_search_by(|t| t.as_str().cmp(token)).ok()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn sep_id(&self) -> usize {
        self.token_id(SEP_TOKEN).expect("separator in vocabulary")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_subgoal_type_has_at_least_three_paraphrases() {
        for k in crate::task::SUBGOAL_TYPES {
            assert!(step_templates(k).len() >= 3, "{k:?}");
        }
    }

    #[test]
    fn committed_vocabulary_matches_phrase_bank() {
        let computed = compute_vocabulary();
        let vocab = Vocab::builtin();
        let stored: Vec<String> = (0..vocab.len()).map(|i| vocab.token(i).to_string()).collect();
        assert_eq!(
            computed, stored,
            "vocab.txt is stale; regenerate it from compute_vocabulary()"
        );
    }

    #[test]
    fn vocabulary_is_sorted_for_binary_search() {
        let v = compute_vocabulary();
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(v, sorted);
        let vocab = Vocab::builtin();
        for (i, tok) in v.iter().enumerate() {
            assert_eq!(vocab.token_id(tok), Some(i));
        }
    }
}
