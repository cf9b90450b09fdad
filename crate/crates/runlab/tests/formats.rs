use proptest::prelude::*;
use xferlab::plot::{collect_series, render_svg};
use xferlab::{format_g6, ResultTable, RunError, Value};

fn glm_header() -> ResultTable {
    ResultTable::new(
        "glm_curves",
        &["scenario", "alpha", "k", "seed_count", "acc_pretrained", "acc_finetuned", "stderr_pretrained", "stderr_finetuned"],
    )
}

#[test]
fn empty_table_is_header_only() {
    let csv = glm_header().to_csv().unwrap();
    assert_eq!(
        String::from_utf8(csv).unwrap(),
        "scenario,alpha,k,seed_count,acc_pretrained,acc_finetuned,stderr_pretrained,stderr_finetuned\n"
    );
    assert_eq!(glm_header().to_json().trim(), "[]");
}

#[test]
fn cells_with_commas_and_quotes_are_quoted() {
    let mut t = ResultTable::new("t", &["name", "v"]);
    t.push(vec!["a,b".into(), 1.5.into()]);
    t.push(vec!["say \"hi\"".into(), 2.0.into()]);
    let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
    assert_eq!(text, "name,v\n\"a,b\",1.5\n\"say \"\"hi\"\"\",2\n");
    let back = ResultTable::read_csv("t", text.as_bytes()).unwrap();
    assert_eq!(back.rows[0][0], Value::Text("a,b".into()));
    assert_eq!(back.rows[1][0], Value::Text("say \"hi\"".into()));
}

#[test]
fn floats_use_six_significant_digits() {
    assert_eq!(format_g6(0.123456789), "0.123457");
    assert_eq!(format_g6(123456789.0), "1.23457e+08");
    assert_eq!(format_g6(1e-7), "1e-07");
    assert_eq!(format_g6(50.0), "50");
    let mut t = ResultTable::new("t", &["x", "bad"]);
    t.push(vec![(2.0f64 / 3.0).into(), f64::NAN.into()]);
    let json: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
    assert_eq!(json[0]["x"], serde_json::json!(0.666667));
    assert!(json[0]["bad"].is_null());
}

#[test]
fn missing_or_text_columns_are_errors() {
    let mut t = ResultTable::new("t", &["x", "label"]);
    t.push(vec![1.0.into(), "a".into()]);
    assert!(matches!(t.numeric_column("nope"), Err(RunError::ColumnMissing(_))));
    assert!(matches!(t.numeric_column("label"), Err(RunError::NotNumeric(_))));
    assert_eq!(RunError::ColumnMissing("y".into()).exit_code(), 2);
}

fn count(svg: &str, needle: &str) -> usize {
    svg.matches(needle).count()
}

#[test]
fn single_point_draws_one_marker() {
    let mut t = ResultTable::new("t", &["x", "y"]);
    t.push(vec![0.5.into(), 3.0.into()]);
    let svg = render_svg(&collect_series(&t, "x", &["y"], None).unwrap(), "x", "y", "t");
    assert_eq!(count(&svg, "class=\"marker\""), 1);
    assert_eq!(count(&svg, "class=\"series\""), 0);
    assert_eq!(count(&svg, "class=\"legend-entry\""), 1);
}

#[test]
fn groups_become_legend_entries() {
    let mut t = ResultTable::new("t", &["alpha", "k", "acc"]);
    for k in [1, 32] {
        for a in [-1.0, 0.0, 1.0] {
            t.push(vec![a.into(), Value::Int(k), (50.0 + a * k as f64).into()]);
        }
    }
    let series = collect_series(&t, "alpha", &["acc"], Some("k")).unwrap();
    let svg = render_svg(&series, "alpha", "acc", "curves");
    assert_eq!(count(&svg, "class=\"legend-entry\""), 2);
    assert_eq!(count(&svg, "class=\"series\""), 2);
    assert!(svg.contains("class=\"x-label\"") && svg.contains(">alpha<"));
}

#[test]
fn increasing_accuracy_climbs_on_screen() {
    // Shape of a task sweep summary: Bob's accuracy rising with beta.
    let mut t = ResultTable::new("task_sweep", &["beta", "bob_acc"]);
    for (b, a) in [(0.0, 15.0), (0.5, 55.0), (1.0, 99.0)] {
        t.push(vec![b.into(), a.into()]);
    }
    let svg = render_svg(&collect_series(&t, "beta", &["bob_acc"], None).unwrap(), "beta", "bob_acc", "t");
    let line = svg.lines().find(|l| l.contains("class=\"series\"")).unwrap();
    let pts = line.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
    let coords: Vec<(f64, f64)> = pts
        .split(' ')
        .map(|p| {
            let (x, y) = p.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect();
    assert_eq!(coords.len(), 3);
    assert!(coords.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1), "{coords:?}");
}

proptest! {
    #[test]
    fn csv_round_trip_at_g6(vals in prop::collection::vec(-1e6f64..1e6, 0..20), label in "[a-z ,\"]{0,8}") {
        let mut t = ResultTable::new("t", &["label", "v"]);
        for v in &vals {
            t.push(vec![label.clone().into(), (*v).into()]);
        }
        let back = ResultTable::read_csv("t", &t.to_csv().unwrap()).unwrap();
        prop_assert_eq!(back.rows.len(), vals.len());
        for (row, v) in back.rows.iter().zip(&vals) {
            let got = row[1].as_f64().unwrap();
            let want: f64 = format_g6(*v).parse().unwrap();
            prop_assert_eq!(got, want);
            prop_assert!((got - v).abs() <= 5e-6 * v.abs().max(1e-300));
            // The label either stays text or parses back to the same number.
            prop_assert_eq!(row[0].render(), Value::from(label.clone()).render());
        }
    }
}
