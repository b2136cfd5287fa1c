//! Generator for the spatial / non-spatial reasoning question corpus.
//!
//! Spatial items describe a scene with objects at explicit relative
//! positions and ask where something is. Non-spatial items are personal
//! reflections and abstract syllogisms with no layout content. Generation is
//! purely combinatorial, so the corpus is identical on every run.

use crate::harness::QuestionItem;

const SCENES: [(&str, [&str; 4], &str); 10] = [
    ("kitchen", ["fridge", "sink", "oven", "pantry door"], "bread knife"),
    ("garage", ["workbench", "car", "tool cabinet", "bicycle rack"], "tape measure"),
    ("classroom", ["whiteboard", "teacher's desk", "bookcase", "window"], "box of chalk"),
    ("park", ["fountain", "bench", "oak tree", "playground"], "red frisbee"),
    ("bedroom", ["bed", "wardrobe", "dresser", "desk"], "phone charger"),
    ("train station", ["ticket machine", "newsstand", "clock tower", "platform stairs"], "lost umbrella"),
    ("museum hall", ["marble statue", "information desk", "tall painting", "glass case"], "audio guide"),
    ("warehouse", ["forklift", "loading dock", "shelving unit", "office door"], "clipboard"),
    ("garden", ["shed", "vegetable bed", "apple tree", "compost bin"], "watering can"),
    ("hotel lobby", ["reception counter", "elevator", "armchair", "revolving door"], "room key"),
];

const SIDES: [&str; 3] = ["to your left", "to your right", "straight ahead of you"];
const RELATIONS: [&str; 2] = ["next to", "just behind"];

const TRAITS: [&str; 10] = [
    "often works late into the night",
    "rarely says no when friends ask for favors",
    "keeps changing hobbies every few months",
    "worries a lot about what colleagues think",
    "has been skipping meals to save time",
    "spends most evenings scrolling through news",
    "recently stopped calling an old friend",
    "tends to postpone difficult decisions",
    "feels guilty whenever taking a day off",
    "compares personal progress with others constantly",
];

const EFFECTS: [&str; 10] = [
    "leads to burnout",
    "affects your mood",
    "hurts your relationships",
    "makes you less creative",
    "explains why you feel tired",
    "is a sign of low self-esteem",
    "reduces your motivation",
    "is a habit worth changing",
    "makes you more anxious",
    "says something about your priorities",
];

const CATEGORIES: [(&str, &str); 10] = [
    ("poet", "writer"),
    ("violinist", "musician"),
    ("surgeon", "doctor"),
    ("sparrow", "bird"),
    ("sonnet", "poem"),
    ("carpenter", "craftsperson"),
    ("novel", "book"),
    ("tulip", "flower"),
    ("chess player", "strategist"),
    ("lawyer", "professional"),
];

const PROPERTIES: [&str; 10] = [
    "patient",
    "curious",
    "famous",
    "expensive",
    "self-taught",
    "admired",
    "rare",
    "old",
    "ambitious",
    "unusual",
];

fn spatial_items() -> Vec<QuestionItem> {
    let mut out = Vec::with_capacity(200);
    for (place, objects, item) in SCENES {
        // Four choices of which object is unmentioned; for the other three,
        // rotate their sides; the target anchor alternates.
        for skip in 0..4 {
            let shown: Vec<&str> = (0..4).filter(|&i| i != skip).map(|i| objects[i]).collect();
            for rot in 0..3 {
                let placed: Vec<(&str, &str)> = (0..3).map(|k| (shown[(k + rot) % 3], SIDES[k])).collect();
                for (r, relation) in RELATIONS.iter().enumerate() {
                    let anchor = placed[(rot + r + skip) % 3].0;
                    let n = out.len();
                    if n >= 200 {
                        break;
                    }
                    let description: Vec<String> = placed
                        .iter()
                        .map(|(obj, side)| format!("the {obj} is {side}"))
                        .collect();
                    out.push(QuestionItem {
                        question_id: format!("spatial-{n:03}"),
                        is_spatial: true,
                        prompt: format!(
                            "You are standing in the {place}: {}, and {}. You remember leaving the {item} {relation} the {anchor}. Which direction should you go to find it?",
                            description[..2].join(", "),
                            description[2]
                        ),
                    });
                }
            }
        }
    }
    out.truncate(200);
    out
}

fn non_spatial_items() -> Vec<QuestionItem> {
    let mut out = Vec::with_capacity(200);
    for t in TRAITS {
        for e in EFFECTS {
            let n = out.len();
            out.push(QuestionItem {
                question_id: format!("nonspatial-{n:03}"),
                is_spatial: false,
                prompt: format!("You are a person who {t}, and you wonder whether this {e}. What do you think?"),
            });
        }
    }
    for (a, b) in CATEGORIES {
        for p in PROPERTIES {
            let n = out.len();
            out.push(QuestionItem {
                question_id: format!("nonspatial-{n:03}"),
                is_spatial: false,
                prompt: format!(
                    "Every {a} is a {b}, and some {b}s are {p}. Does it follow that some {a}s are {p}? Explain your reasoning."
                ),
            });
        }
    }
    out
}

/// The shipped corpus: 200 spatial then 200 non-spatial items.
pub fn question_corpus() -> Vec<QuestionItem> {
    let mut out = spatial_items();
    out.extend(non_spatial_items());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn corpus_is_balanced_and_unique() {
        let corpus = question_corpus();
        assert_eq!(corpus.len(), 400);
        assert_eq!(corpus.iter().filter(|q| q.is_spatial).count(), 200);
        let ids: HashSet<_> = corpus.iter().map(|q| &q.question_id).collect();
        let prompts: HashSet<_> = corpus.iter().map(|q| &q.prompt).collect();
        assert_eq!(ids.len(), 400);
        assert_eq!(prompts.len(), 400);
    }

    #[test]
    fn non_spatial_items_avoid_direction_words() {
        for q in question_corpus().iter().filter(|q| !q.is_spatial) {
            for w in ["left", "right", "behind", "ahead", "direction", "next to"] {
                assert!(!q.prompt.contains(w), "{}: {w}", q.question_id);
            }
        }
    }
}
