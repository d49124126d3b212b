use holodof_web::{piece_supports, pose_edof, split_spectrum, DEMO_MAX_NODES};
use serde_json::{json, Value};

fn parse(r: Result<String, String>) -> Value {
    serde_json::from_str(&r.unwrap()).unwrap()
}

fn reference_pose() -> Value {
    json!({
        "distance_lambda": 256.0,
        "theta_deg": 45.0,
        "phi_deg": 0.0,
        "alpha_deg": 0.0,
        "beta_deg": 90.0,
        "tx_side_lambda": 32.0,
        "rx_side_lambda": 32.0
    })
}

fn split(ppl: f64) -> Value {
    json!({
        "center_lambda": [0.0, 32.0, 0.0],
        "tx_side_lambda": 8.0,
        "rx_side_lambda": [64.0, 64.0],
        "n_u": 8,
        "n_v": 8,
        "gamma": 0.0,
        "points_per_lambda": ppl
    })
}

#[test]
fn reference_pose_counts_eight() {
    let v = parse(pose_edof(&reference_pose().to_string()));
    assert!((v["edof"].as_f64().unwrap() - 8.0).abs() < 1e-9);
    assert_eq!(v["edof_rounded"], 8);
    let ups = v["upsilon"].as_f64().unwrap().abs();
    assert!((ups - 0.5).abs() < 1e-12);
    assert!(v["optimal_edof"].as_f64().unwrap() >= 8.0);
}

#[test]
fn edge_on_pose_has_no_norm() {
    let mut p = reference_pose();
    p["theta_deg"] = json!(0.0);
    let v = parse(pose_edof(&p.to_string()));
    assert!(v["edof"].as_f64().unwrap().abs() < 1e-9);
    assert!(v["op_norm"].is_null());
}

#[test]
fn supports_cover_every_piece() {
    let v = parse(piece_supports(&split(1.0).to_string()));
    let sup = v["supports"].as_array().unwrap();
    assert_eq!(sup.len(), 64);
    assert_eq!(v["included"].as_array().unwrap().len(), 64);
    let sum: f64 = sup.iter().map(|s| s["edof"].as_f64().unwrap()).sum();
    assert!((sum - v["edof"].as_f64().unwrap()).abs() <= 1e-9 * sum);
    for s in sup {
        for p in s["vertices"].as_array().unwrap() {
            let (x, y) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
            assert!(x.hypot(y) <= 1.0 + 1e-9);
        }
    }
    let f = v["overlap_fraction"].as_f64().unwrap();
    assert!((0.0..1.0).contains(&f));
}

#[test]
fn spectrum_is_normalized_and_capped() {
    let v = parse(split_spectrum(&split(2.0).to_string()));
    let n = v["normalized"].as_array().unwrap();
    assert_eq!(v["nodes"], 256);
    assert!(n.windows(2).all(|w| w[0].as_f64() >= w[1].as_f64()));
    assert_eq!(v["levels"][0], 1.0);
    assert!(v["count"].as_u64().unwrap() > 0);
    let e = split_spectrum(&split(10.0).to_string()).unwrap_err();
    assert!(e.contains(&DEMO_MAX_NODES.to_string()), "{e}");
}

#[test]
fn bad_input_is_reported() {
    assert!(pose_edof("{").is_err());
    let mut p = reference_pose();
    p["colour"] = json!("red");
    assert!(pose_edof(&p.to_string()).unwrap_err().contains("colour"));
    let mut s = split(1.0);
    s["n_u"] = json!(64);
    s["n_v"] = json!(64);
    assert!(piece_supports(&s.to_string()).is_err());
}
