use serde_json::Value;
use stgst_wasm::{kernel_curves_json, scattering_tree_json, stability_curve_json};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn itersine_curves_sum_to_one() {
    let v = parse(kernel_curves_json("itersine", 4, 101).unwrap());
    assert_eq!(v["curves"].as_array().unwrap().len(), 4);
    assert_eq!(floats(&v["eigenvalues"]).len(), 20);
    for e in floats(&v["energy"]) {
        assert!((e - 1.0).abs() < 1e-12);
    }
    assert!((v["frame"]["lower"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn geometric_curves_on_unit_interval() {
    let v = parse(kernel_curves_json("geometric", 3, 11).unwrap());
    let lambda = floats(&v["lambda"]);
    assert_eq!((lambda[0], lambda[10]), (0.0, 1.0));
    let first = floats(&v["curves"][0]);
    assert!((first[5] - 0.25).abs() < 1e-12);
    assert!(v["frame"].is_null());
}

#[test]
fn curve_arguments_are_checked() {
    assert!(kernel_curves_json("itersine", 4, 1).is_err());
    assert!(kernel_curves_json("wobbly", 4, 10).is_err());
    assert!(kernel_curves_json("geometric", 40, 10).is_err());
    assert!(scattering_tree_json(2, 2, 2, 5, 1).is_err());
    assert!(stability_curve_json("both", 1).is_err());
}

#[test]
fn tree_has_expected_nodes() {
    let v = parse(scattering_tree_json(2, 2, 3, 1, 7).unwrap());
    let nodes = v["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 21);
    assert_eq!(nodes[0]["path"], "root");
    assert_eq!(nodes[1]["layer"], 1);
    assert_eq!(floats(&nodes[0]["phi"]).len(), 32);
    assert_eq!(v["signal"].as_array().unwrap().len(), 20);
}

#[test]
fn stability_curves_stay_below_bounds() {
    for kind in ["snr", "epsilon"] {
        let v = parse(stability_curve_json(kind, 3).unwrap());
        for (l, r) in floats(&v["lhs"]).iter().zip(floats(&v["rhs"])) {
            assert!(*l <= r * (1.0 + 1e-9), "{kind}: {l} > {r}");
        }
    }
}
