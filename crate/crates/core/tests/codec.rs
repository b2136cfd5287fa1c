use std::time::Instant;

use gwsot_core::sir::{decode, encode};
use gwsot_core::{Coord, GridState, SirError, SirType};
use proptest::prelude::*;

#[test]
fn round_trip_all_states_all_encodings() {
    let t0 = Instant::now();
    let states = GridState::enumerate_open(5);
    let mut cases = 0;
    for sir in SirType::ALL {
        let mut seen = std::collections::HashSet::new();
        for s in &states {
            let text = encode(s, sir).unwrap();
            assert_eq!(encode(s, sir).unwrap().as_bytes(), text.as_bytes());
            assert!(!text.ends_with('\n'));
            assert_eq!(decode(&text, sir).unwrap(), *s, "{sir}: {text}");
            assert!(seen.insert(text), "{sir} collides");
            cases += 1;
        }
    }
    assert_eq!(cases, 3600);
    assert!(t0.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn json_fields_match_state() {
    for s in GridState::enumerate_open(5) {
        let v: serde_json::Value = serde_json::from_str(&encode(&s, SirType::JsonCoords).unwrap()).unwrap();
        assert_eq!(v["grid_size"], 5);
        assert_eq!(v["agent"]["x"], s.agent.x);
        assert_eq!(v["agent"]["y"], s.agent.y);
        assert_eq!(v["goal"]["x"], s.goal.x);
        assert_eq!(v["goal"]["y"], s.goal.y);
    }
}

#[test]
fn symbol_grid_places_marks() {
    for s in GridState::enumerate_open(5) {
        let text = encode(&s, SirType::SymbolGrid).unwrap();
        let rows: Vec<Vec<char>> = text.lines().skip(1).map(|l| l.chars().collect()).collect();
        assert_eq!(rows[s.agent.y][s.agent.x], 'A');
        assert_eq!(rows[s.goal.y][s.goal.x], 'G');
        assert_eq!(rows.iter().flatten().filter(|&&c| c == '.').count(), 23);
    }
}

#[test]
fn chess_ranks_count_from_bottom() {
    let s = GridState::new(5, Coord::new(0, 4), Coord::new(4, 0)).unwrap();
    assert_eq!(
        encode(&s, SirType::ChessNotation).unwrap(),
        "Grid: 5x5 (files a-e, ranks 1-5). Agent: a1. Goal: e5."
    );
}

#[test]
fn encodings_carry_no_cross_talk() {
    // Each state encodes differently from every other state in every
    // encoding, so decoders cannot be lossy.
    let s = GridState::new(7, Coord::new(6, 6), Coord::new(0, 3)).unwrap();
    for sir in SirType::ALL {
        assert_eq!(decode(&encode(&s, sir).unwrap(), sir).unwrap(), s);
    }
}

#[test]
fn wrong_decoder_is_an_error_not_a_state() {
    let s = GridState::new(5, Coord::new(1, 2), Coord::new(3, 3)).unwrap();
    for from in SirType::ALL {
        let text = encode(&s, from).unwrap();
        for to in SirType::ALL {
            if to != from {
                assert!(decode(&text, to).is_err(), "{from} text accepted by {to}");
            }
        }
    }
}

#[test]
fn chess_size_limit() {
    let s = GridState::new(27, Coord::new(0, 0), Coord::new(3, 3)).unwrap();
    assert!(matches!(encode(&s, SirType::ChessNotation), Err(SirError::Unrepresentable(_))));
    let s = GridState::new(26, Coord::new(25, 0), Coord::new(3, 3)).unwrap();
    assert_eq!(decode(&encode(&s, SirType::ChessNotation).unwrap(), SirType::ChessNotation).unwrap(), s);
}

fn arb_state() -> impl Strategy<Value = GridState> {
    (2usize..=15).prop_flat_map(|n| {
        (Just(n), 0..n, 0..n, 0..n, 0..n)
            .prop_filter("agent off goal", |(_, ax, ay, gx, gy)| (ax, ay) != (gx, gy))
            .prop_map(|(n, ax, ay, gx, gy)| GridState::new(n, Coord::new(ax, ay), Coord::new(gx, gy)).unwrap())
    })
}

fn arb_sir() -> impl Strategy<Value = SirType> {
    prop::sample::select(SirType::ALL.to_vec())
}

proptest! {
    #[test]
    fn round_trip_any_size(s in arb_state(), sir in arb_sir()) {
        let text = encode(&s, sir).unwrap();
        prop_assert_eq!(decode(&text, sir).unwrap(), s);
    }

    #[test]
    fn decode_never_panics_on_edits(s in arb_state(), sir in arb_sir(), at in any::<prop::sample::Index>(), c in any::<char>()) {
        let text = encode(&s, sir).unwrap();
        let mut chars: Vec<char> = text.chars().collect();
        let i = at.index(chars.len());
        chars[i] = c;
        let edited: String = chars.into_iter().collect();
        if let Ok(back) = decode(&edited, sir) {
            // A surviving edit must still describe a valid, re-encodable state.
            prop_assert!(encode(&back, sir).is_ok());
        }
    }

    #[test]
    fn decode_never_panics_on_garbage(text in ".{0,200}", sir in arb_sir()) {
        let _ = decode(&text, sir);
    }
}
