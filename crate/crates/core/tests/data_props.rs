use std::io::Cursor;

use convlab_core::baselines::fixed_policy;
use convlab_core::data::{
    generate_synthetic, load_run_file, make_separable_set, read_records, save_records, write_records, GenParams,
};
use convlab_core::env::evaluate_policy;
use convlab_core::expert::select_expert;
use convlab_core::{CascadeParams, Error};

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn score_gap_predicts_relevant_rank() {
    let records = generate_synthetic(&GenParams {
        n_conversations: 2000,
        seed: 5,
        ..GenParams::default()
    })
    .unwrap();
    let (mut gaps, mut ranks) = (Vec::new(), Vec::new());
    'outer: for r in &records {
        for t in r.turns() {
            let s = t.result_list.scores();
            gaps.push(s[0] - s[9]);
            ranks.push(t.result_list.relevant_rank().unwrap() as f64);
            if gaps.len() == 10_000 {
                break 'outer;
            }
        }
    }
    assert_eq!(gaps.len(), 10_000);
    let rho = spearman(&gaps, &ranks);
    assert!(rho <= -0.3, "spearman {rho}");
}

#[test]
fn generated_lists_are_sorted_and_finite() {
    let records = generate_synthetic(&GenParams {
        n_conversations: 300,
        seed: 6,
        ..GenParams::default()
    })
    .unwrap();
    for r in &records {
        assert!((2..=10).contains(&r.num_turns()));
        for t in r.turns() {
            for list in [&t.result_list, &t.question_list] {
                assert_eq!(list.len(), 100);
                assert!(list.scores().iter().all(|s| s.is_finite()));
                assert!(list.scores().windows(2).all(|w| w[0] >= w[1]));
            }
        }
    }
}

#[test]
fn serialized_output_is_byte_stable() {
    let bytes = |seed| {
        let records = generate_synthetic(&GenParams {
            n_conversations: 50,
            seed,
            ..GenParams::default()
        })
        .unwrap();
        let mut out = Vec::new();
        write_records(&records, &mut out).unwrap();
        out
    };
    assert_eq!(bytes(3), bytes(3));
    assert_ne!(bytes(3), bytes(4));

    let sep = |seed| {
        let mut out = Vec::new();
        write_records(&make_separable_set(20, seed).unwrap(), &mut out).unwrap();
        out
    };
    assert_eq!(sep(1), sep(1));
}

#[test]
fn file_round_trip() {
    let records = generate_synthetic(&GenParams {
        n_conversations: 40,
        seed: 8,
        ..GenParams::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.jsonl");
    save_records(&records, &path).unwrap();
    assert_eq!(load_run_file(&path).unwrap(), records);
}

const WORKED_EXAMPLE: &str = r#"{"id": "worked", "turns": [{"result": {"scores": [0.9, 0.8, 0.7, 0.1], "relevant_index": 2}, "question": {"scores": [0.6, 0.5, 0.4, 0.3], "relevant_index": 2}}, {"result": {"scores": [0.95, 0.2, 0.1, 0.05], "relevant_index": 0}, "question": {"scores": [0.5, 0.4, 0.3, 0.2], "relevant_index": -1}}]}
"#;

#[test]
fn hand_written_worked_example_flips_with_alpha() {
    let records = read_records(Cursor::new(WORKED_EXAMPLE)).unwrap();
    let record = &records[0];
    let at = |alpha| select_expert(record, CascadeParams::new(alpha).unwrap());
    let low = at(0.5);
    assert_eq!(low.stop_turn, 1);
    assert!((low.ecrr_value - 1.0 / 3.0).abs() < 1e-12);
    let high = at(0.7);
    assert_eq!(high.stop_turn, 2);
    assert!((high.ecrr_value - 0.343).abs() < 1e-12);
}

#[test]
fn out_of_range_index_names_line_and_field() {
    let good = WORKED_EXAMPLE.trim_end();
    let bad = good.replacen("\"relevant_index\": 0", "\"relevant_index\": 4", 1);
    let text = format!("{good}\n{good}\n{bad}\n");
    match read_records(Cursor::new(text)) {
        Err(Error::Parse { line, field, .. }) => {
            assert_eq!(line, 3);
            assert_eq!(field, "turns[1].result.relevant_index");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn separable_fixture_fixed_policy_means() {
    let records = make_separable_set(1000, 2).unwrap();
    let alpha = 0.7;
    let mean = |n| {
        evaluate_policy(&fixed_policy(n), &records, &[alpha])
            .unwrap()
            .report
            .ecrr_at(alpha)
            .unwrap()
    };
    // Case A: result rank 1, then (after a rank-1 question) rank 1.
    // Case B: result rank 20, then (after a rank-1 question) rank 1.
    assert!((mean(0) - (1.0 + 1.0 / 20.0) / 2.0).abs() < 1e-12);
    assert!((mean(1) - (alpha + alpha) / 2.0).abs() < 1e-12);
    assert_eq!(mean(2), 0.0);
    let oracle: f64 = records
        .iter()
        .map(|r| select_expert(r, CascadeParams::new(alpha).unwrap()).ecrr_value)
        .sum::<f64>()
        / records.len() as f64;
    assert!((oracle - (1.0 + alpha) / 2.0).abs() < 1e-12);
}
