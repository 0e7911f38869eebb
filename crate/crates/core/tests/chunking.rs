mod common;

use std::collections::HashSet;

use proptest::prelude::*;

use feelgrid::output::{segment_response, sentence_spans};
use feelgrid::render::{render, Cell, ElementId, ViewportState, PLOT_WIDTH};

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn fuzzed_responses_rejoin_and_keep_numbers_whole(seed in any::<u64>()) {
        let text = fuzz_response(&mut rng(seed));
        if let Err(e) = check_chunks(&text) {
            prop_assert!(false, "{}", e);
        }
    }

    #[test]
    fn arbitrary_text_rejoins(text in "\\PC{0,200}") {
        let joined: String = sentence_spans(&text).into_iter().map(|r| text[r].to_string()).collect();
        prop_assert_eq!(joined, text);
    }
}

#[test]
fn two_sentence_example_gives_two_disjoint_chunks() {
    let chart = fixture("interest_rates");
    let frame = render(&chart, &ViewportState::initial(&chart, PLOT_WIDTH), 1).unwrap();
    let text = "In May 2021, interest rates increased to 0.25%. In June they dropped to 0.1%.";
    let (a, b) = (frame.data().nth(4).unwrap().id, frame.data().nth(5).unwrap().id);
    let chunks = segment_response(text, &[vec![a], vec![b]], &frame);
    assert_eq!(chunks.len(), 2);
    let cells = |i: usize| -> HashSet<Cell> { chunks[i].highlight.as_ref().unwrap().cells.iter().copied().collect() };
    assert!(!cells(0).is_empty() && cells(0).is_disjoint(&cells(1)));
    assert_eq!(chunks[0].text.clone() + &chunks[1].text, text);
}

#[test]
fn decimal_guard_cases() {
    for text in [
        "Rates rose to 3.85. Then they held.",
        "The peak was 3.85% in 2023.",
        "It moved from 0.25 to 3.85 over 1,200.75 days.",
        "In Q2. 2023 rates peaked at 3.85%.",
        "Values like 3.14159 and -0.5 stay intact. Next sentence.",
        "e.g. 2.5 vs. 3.5 is approx. 1.0 apart.",
    ] {
        check_chunks(text).unwrap();
    }
    assert_eq!(sentence_spans("In Q2. 2023 rates peaked at 3.85%.").len(), 1);
    assert_eq!(sentence_spans("Rates rose to 3.85. Then they held.").len(), 2);
}

#[test]
fn unattributed_sentences_get_no_highlight() {
    let chart = fixture("interest_rates");
    let frame = render(&chart, &ViewportState::initial(&chart, PLOT_WIDTH), 1).unwrap();
    let chunks = segment_response("One. Two.", &[vec![ElementId(0)]], &frame);
    assert!(chunks[0].highlight.is_some());
    assert!(chunks[1].highlight.is_none());
}
