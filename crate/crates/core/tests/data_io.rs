use std::path::PathBuf;

use proptest::prelude::*;
use tstdp_core::data_io::{dataset_to_csv, load_dataset, parse_dataset, write_dataset, Dataset};
use tstdp_core::protocols::ProtocolKind;

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(format!("{name}.csv"))
}

#[test]
fn bundled_datasets_have_expected_sizes() {
    let vc = load_dataset(&bundled("visual_cortex")).unwrap();
    assert_eq!((vc.name.as_str(), vc.len()), ("visual_cortex", 10));
    assert!(vc.points.iter().all(|p| p.protocol.kind() == ProtocolKind::Pairing));
    let hc = load_dataset(&bundled("hippocampal")).unwrap();
    assert_eq!((hc.name.as_str(), hc.len()), ("hippocampal", 13));
    assert!(hc.points.iter().all(|p| p.sem > 0.0 && !p.source.is_empty()));
}

#[test]
fn bundled_datasets_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["visual_cortex", "hippocampal"] {
        let ds = load_dataset(&bundled(name)).unwrap();
        let path = dir.path().join(format!("{name}.csv"));
        write_dataset(&ds, &path).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), ds);
    }
}

#[test]
fn malformed_rows_are_rejected() {
    let head = "label,variant,dt_ms,dt1_ms,dt2_ms,t_ms,rho_hz,reps,dw_exp,sem,source\n";
    for row in [
        "a,pairing,5,,,,1,60,0.1,0,x\n",
        "a,pairing,5,,,,1,60,abc,0.1,x\n",
        "a,bogus,5,,,,1,60,0.1,0.1,x\n",
        "a,pre_post_pre,,-5,5,,1,60,0.1,0.1,x\n",
        "a,pairing,5,,,,-1,60,0.1,0.1,x\n",
    ] {
        assert!(parse_dataset(&format!("{head}{row}"), "other").is_err(), "{row}");
    }
}

fn row() -> impl Strategy<Value = String> {
    let dt = (1i32..100).prop_map(|v| v as f64 * 0.5);
    prop_oneof![
        (dt.clone(), any::<bool>()).prop_map(|(d, neg)| format!("pairing,{},,,", if neg { -d } else { d })),
        (dt.clone(), dt.clone()).prop_map(|(a, b)| format!("pre_post_pre,,{a},{},", -b)),
        (dt.clone(), dt.clone()).prop_map(|(a, b)| format!("post_pre_post,,{},{b},", -a)),
        (1i32..10, 11i32..120, any::<bool>())
            .prop_map(|(d, t, neg)| format!("quadruplet,,{},{d},{}", -d, if neg { -t } else { t })),
    ]
}

fn dataset_text() -> impl Strategy<Value = String> {
    prop::collection::vec((row(), 1i32..5, -500i32..500, 1i32..300), 1..15).prop_map(|rows| {
        let mut s = String::from("# dataset: synthetic\nlabel,variant,dt_ms,dt1_ms,dt2_ms,t_ms,rho_hz,reps,dw_exp,sem,source\n");
        for (i, (r, rho, dw, sem)) in rows.into_iter().enumerate() {
            s.push_str(&format!("p{i},{r},{}.5,60,{},{},tag\n", rho, dw as f64 / 1000.0, sem as f64 / 1000.0));
        }
        s
    })
}

proptest! {
    #[test]
    fn load_write_load_is_exact(text in dataset_text()) {
        let first: Dataset = parse_dataset(&text, "x").unwrap();
        let again = parse_dataset(&dataset_to_csv(&first, &["note"]), "x").unwrap();
        prop_assert_eq!(again, first);
    }
}
