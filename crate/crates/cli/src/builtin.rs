//! Scenario texts shipped with the binary.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown builtin scenario `{name}`; available: {}", NAMES.join(", "))]
pub struct UnknownBuiltin {
    pub name: String,
}

pub const NAMES: [&str; 3] = [
    "dispatch3-directed",
    "dispatch3-undirected-demo",
    "two-agent-undirected",
];

const DISPATCH3_DIRECTED: &str = r#"# Three-generator economic dispatch over an unbalanced digraph.
# Total demand C = 420 MW, shared equally at t = 0.
#
# Edges are [from, to]: 1 -> 2, 2 -> 1, 2 -> 3, 3 -> 2, 3 -> 1.
# In-degrees (2, 2, 1), out-degrees (1, 2, 2); strongly connected.
#
# The certified step bound for this graph is about 6.1e-4, which needs
# thousands of steps to settle. beta = 0.1 converges well inside the horizon
# and keeps V non-increasing here, so it is run with unsafe_beta.
protocol = "directed"
horizon = 5.0
beta = 0.1
unsafe_beta = true
C = 420.0
x0 = [140.0, 140.0, 140.0]

[graph]
n = 3
edges = [[1, 2], [2, 1], [2, 3], [3, 2], [3, 1]]

[objective]
quadratic = [
    { a = 0.096, b = 1.22, c = 51.0 },
    { a = 0.072, b = 3.41, c = 31.0 },
    { a = 0.105, b = 2.53, c = 78.0 },
]

[schedule]
kind = "truncated"
T_c = 2.0
k_eps = 80
eps = 0.01
"#;

const DISPATCH3_UNDIRECTED: &str = r#"# The three-generator dispatch problem on an undirected path 1 - 2 - 3,
# run at the certified step size.
protocol = "undirected"
horizon = 5.0
C = 420.0
x0 = [140.0, 140.0, 140.0]

[graph]
n = 3
edges = [[1, 2], [2, 1], [2, 3], [3, 2]]

[objective]
quadratic = [
    { a = 0.096, b = 1.22, c = 51.0 },
    { a = 0.072, b = 3.41, c = 31.0 },
    { a = 0.105, b = 2.53, c = 78.0 },
]

[schedule]
kind = "truncated"
T_c = 2.0
k_eps = 80
eps = 0.01
"#;

const TWO_AGENT_UNDIRECTED: &str = r#"# f1 = x^2, f2 = (x - 4)^2 with x1 + x2 = 0; optimum (-2, 2), f* = 8.
protocol = "undirected"
horizon = 3.0
C = 0.0
x0 = [0.0, 0.0]

[graph]
n = 2
edges = [[1, 2], [2, 1]]

[objective]
quadratic = [
    { a = 1.0, b = 0.0, c = 0.0 },
    { a = 1.0, b = -8.0, c = 16.0 },
]

[schedule]
kind = "truncated"
T_c = 2.0
k_eps = 80
eps = 0.01
"#;

pub fn builtin(name: &str) -> Result<&'static str, UnknownBuiltin> {
    match name {
        "dispatch3-directed" => Ok(DISPATCH3_DIRECTED),
        "dispatch3-undirected-demo" => Ok(DISPATCH3_UNDIRECTED),
        "two-agent-undirected" => Ok(TWO_AGENT_UNDIRECTED),
        _ => Err(UnknownBuiltin {
            name: name.to_string(),
        }),
    }
}
