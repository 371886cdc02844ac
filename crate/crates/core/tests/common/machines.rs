use std::collections::HashMap;

use valence_core::reductions::{CounterMachine, CounterOp};

/// Machines with an infinite run; every run keeps both counters below 3.
pub const DIVERGING: [&str; 5] = [
    r#"{"states":["s","t"],"initial":"s","transitions":[
        {"from":"s","op":"inc","counter":1,"to":"t"},
        {"from":"t","op":"dec","counter":1,"to":"s"}]}"#,
    r#"{"states":["s"],"initial":"s","transitions":[
        {"from":"s","op":"zero","counter":1,"to":"s"}]}"#,
    r#"{"states":["s","t","u","v","w","x"],"initial":"s","transitions":[
        {"from":"s","op":"inc","counter":1,"to":"t"},
        {"from":"t","op":"inc","counter":2,"to":"u"},
        {"from":"u","op":"dec","counter":1,"to":"v"},
        {"from":"v","op":"zero","counter":1,"to":"w"},
        {"from":"w","op":"dec","counter":2,"to":"x"},
        {"from":"x","op":"zero","counter":2,"to":"s"}]}"#,
    r#"{"states":["s","t","d"],"initial":"s","transitions":[
        {"from":"s","op":"inc","counter":1,"to":"t"},
        {"from":"s","op":"dec","counter":1,"to":"s"},
        {"from":"t","op":"zero","counter":1,"to":"d"},
        {"from":"t","op":"dec","counter":1,"to":"s"},
        {"from":"d","op":"dec","counter":2,"to":"d"}]}"#,
    r#"{"states":["s","a","b","c","d","e"],"initial":"s","transitions":[
        {"from":"s","op":"inc","counter":1,"to":"a"},
        {"from":"a","op":"inc","counter":1,"to":"b"},
        {"from":"b","op":"dec","counter":1,"to":"c"},
        {"from":"c","op":"dec","counter":1,"to":"d"},
        {"from":"d","op":"zero","counter":1,"to":"s"},
        {"from":"d","op":"inc","counter":2,"to":"e"},
        {"from":"e","op":"zero","counter":2,"to":"e"}]}"#,
];

/// Machines whose runs all end in a failed decrement or zero test.
pub const FAILING: [&str; 5] = [
    r#"{"states":["s","t"],"initial":"s","transitions":[
        {"from":"s","op":"inc","counter":1,"to":"t"},
        {"from":"t","op":"zero","counter":1,"to":"t"}]}"#,
    r#"{"states":["s"],"initial":"s","transitions":[
        {"from":"s","op":"dec","counter":1,"to":"s"}]}"#,
    r#"{"states":["s","t","u","v","w"],"initial":"s","transitions":[
        {"from":"s","op":"inc","counter":1,"to":"t"},
        {"from":"t","op":"inc","counter":1,"to":"u"},
        {"from":"u","op":"dec","counter":1,"to":"v"},
        {"from":"v","op":"dec","counter":1,"to":"w"},
        {"from":"w","op":"dec","counter":1,"to":"w"}]}"#,
    r#"{"states":["s","t","u"],"initial":"s","transitions":[
        {"from":"s","op":"inc","counter":2,"to":"t"},
        {"from":"t","op":"zero","counter":2,"to":"u"},
        {"from":"t","op":"dec","counter":1,"to":"u"},
        {"from":"u","op":"inc","counter":1,"to":"u"}]}"#,
    r#"{"states":["s","t","r"],"initial":"s","transitions":[
        {"from":"s","op":"inc","counter":1,"to":"t"},
        {"from":"s","op":"inc","counter":2,"to":"r"},
        {"from":"t","op":"zero","counter":1,"to":"s"},
        {"from":"r","op":"zero","counter":2,"to":"s"}]}"#,
];

pub fn machine(json: &str) -> CounterMachine {
    CounterMachine::from_json_str(json).unwrap()
}

type Config = (usize, u32, u32);

fn successors(m: &CounterMachine, (q, c1, c2): Config) -> Vec<Config> {
    let mut out = Vec::new();
    for t in m.transitions.iter().filter(|t| m.state_index(&t.from) == q) {
        let to = m.state_index(&t.to);
        let c = if t.counter == 1 { c1 } else { c2 };
        let next = match t.op {
            CounterOp::Inc => Some(c + 1),
            CounterOp::Dec => c.checked_sub(1),
            CounterOp::Zero => (c == 0).then_some(0),
        };
        if let Some(n) = next {
            out.push(if t.counter == 1 { (to, n, c2) } else { (to, c1, n) });
        }
    }
    out
}

/// Whether the machine has an infinite run from the initial configuration
/// with zero counters. `None` when a counter exceeds `bound` before the
/// answer is settled.
pub fn has_infinite_run(m: &CounterMachine, bound: u32) -> Option<bool> {
    // 1 = on the current path, 2 = finished without reaching a cycle
    let mut mark: HashMap<Config, u8> = HashMap::new();
    fn dfs(m: &CounterMachine, c: Config, bound: u32, mark: &mut HashMap<Config, u8>) -> Option<bool> {
        match mark.get(&c) {
            Some(1) => return Some(true),
            Some(_) => return Some(false),
            None => {}
        }
        if c.1 > bound || c.2 > bound {
            return None;
        }
        mark.insert(c, 1);
        for n in successors(m, c) {
            if dfs(m, n, bound, mark)? {
                return Some(true);
            }
        }
        mark.insert(c, 2);
        Some(false)
    }
    dfs(m, (m.state_index(&m.initial), 0, 0), bound, &mut mark)
}
