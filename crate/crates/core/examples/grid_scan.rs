use std::time::Duration;
use vqabench::hypertune::{search, Config, ParamDomain, TrialOutcome, TrialRecord};
fn main() {
    let space = vec![ParamDomain::continuous("v", 0.0, 10.0)];
    let quadratic = |config: &Config| {
        let v = config["v"].as_f64().unwrap();
        Ok(TrialOutcome { loss: (v - 3.0).powi(2), eval_count: 1 })
    };
    let (_, trials) = search(&space, quadratic, 5, Duration::from_secs(60), 1).unwrap();
    for t in &trials {
        let line = serde_json::to_string(t).unwrap();
        let back: TrialRecord = serde_json::from_str(&line).unwrap();
        println!("line: {line}");
        println!("orig: {:?} back: {:?} eq: {}", t.config, back.config, t.config == back.config);
    }
}
