// SAAM test data shared by the unit tests and the acceptance suite, pulled in with `include!`.
// The includer brings `proptest::prelude::*` and the evaluation and model types into scope.

fn scenario(id: &str, kind: ScenarioKind, elements: &[&str], class: Classification, asrs: &[&str]) -> SaamScenario {
    SaamScenario {
        id: id.into(),
        text: format!("scenario {id}"),
        kind,
        classification: class,
        affected_elements: elements.iter().map(|s| s.to_string()).collect(),
        source_asrs: asrs.iter().map(|s| s.to_string()).collect(),
    }
}

fn rank(v: Verdict) -> u8 {
    match v {
        Verdict::Unsatisfied => 0,
        Verdict::Partial => 1,
        Verdict::Satisfied => 2,
        Verdict::Unknown => unreachable!(),
    }
}

fn permutations(items: &[Classification]) -> Vec<Vec<Classification>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Walks every Direct/Indirect multiset of size 0..=5 in every order and returns the number of
/// orderings checked.
fn check_verdict_table() -> usize {
    use Classification::*;
    let mut checked = 0;
    for size in 0..=5 {
        for direct in 0..=size {
            let multiset: Vec<Classification> =
                std::iter::repeat_n(Direct, direct).chain(std::iter::repeat_n(Indirect, size - direct)).collect();
            let expected = if size == 0 {
                Verdict::Unknown
            } else if direct == size {
                Verdict::Satisfied
            } else if direct == 0 {
                Verdict::Unsatisfied
            } else {
                Verdict::Partial
            };
            for p in permutations(&multiset) {
                assert_eq!(verdict(&p), Ok(expected), "{p:?}");
                checked += 1;
            }
            let mut more = multiset.clone();
            more.push(Direct);
            let after = verdict(&more).unwrap();
            if expected == Verdict::Unknown {
                assert!(matches!(after, Verdict::Satisfied | Verdict::Partial));
            } else {
                assert!(rank(after) >= rank(expected), "{multiset:?} + Direct");
            }
        }
    }
    assert_eq!(verdict(&[Direct, Unclassified]), Err(Unclassified));
    checked
}

fn classified_scenarios() -> impl Strategy<Value = Vec<SaamScenario>> {
    let names = ["UserLogin", "ViewBikes", "UserLocation", "Reservation", "Payment", "Bike"];
    prop::collection::vec((prop::sample::subsequence(names.to_vec(), 1..4), any::<bool>(), prop::sample::select(vec![1usize, 2, 3])), 0..8)
        .prop_map(|items| {
            items
                .into_iter()
                .enumerate()
                .map(|(i, (els, indirect, a))| {
                    let kind = if els.len() == 1 { ScenarioKind::Individual } else { ScenarioKind::Interacting };
                    let class = if indirect { Classification::Indirect } else { Classification::Direct };
                    scenario(&format!("SCN-{:03}", i + 1), kind, &els, class, &[&format!("ASR-00{a}")])
                })
                .collect()
        })
}

