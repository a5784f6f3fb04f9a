//! Bundled reference experiments with their expected headline numbers.

pub struct Fixture {
    pub name: &'static str,
    pub kind: &'static str,
    pub json: &'static str,
    pub expected: &'static str,
}

pub fn all() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "diag-2-half",
            kind: "spectrum",
            json: include_str!("../fixtures/diag-2-half.json"),
            expected: "lambda = (ln 2, -ln 2) within 1e-12, simple",
        },
        Fixture {
            name: "diag-p075",
            kind: "spectrum",
            json: include_str!("../fixtures/diag-p075.json"),
            expected: "lambda_1 = 0.5 within 3 sigma (coordinate drift 2p-1)",
        },
        Fixture {
            name: "diag-p050",
            kind: "spectrum",
            json: include_str!("../fixtures/diag-p050.json"),
            expected: "|lambda_1| < 3 sigma, degenerate (amenable hull)",
        },
        Fixture {
            name: "rotation",
            kind: "spectrum",
            json: include_str!("../fixtures/rotation.json"),
            expected: "lambda = (0, 0), degenerate (isometries)",
        },
        Fixture {
            name: "rotation-flags",
            kind: "flags",
            json: include_str!("../fixtures/rotation-flags.json"),
            expected: "exit 3 with insufficient singular value gap",
        },
        Fixture {
            name: "sl2z-uniform-walk",
            kind: "spectrum",
            json: include_str!("../fixtures/sl2z-uniform-walk.json"),
            expected: "lambda_1 > 0 (about 0.3212), simple; QR vs oracle within 2 se",
        },
        Fixture {
            name: "sl3-generic",
            kind: "spectrum",
            json: include_str!("../fixtures/sl3-generic.json"),
            expected: "both gaps > 3 sigma, exponent sum within 5 sigma of 0",
        },
        Fixture {
            name: "sl2z-induced",
            kind: "induce",
            json: include_str!("../fixtures/sl2z-induced.json"),
            expected: "lambda*_1/lambda_1 within 5% of 4 (mass 1/4); Kac within 3 sigma",
        },
        Fixture {
            name: "sl2z-flags",
            kind: "flags",
            json: include_str!("../fixtures/sl2z-flags.json"),
            expected: "median off-diagonal mass < 1e-3 at depth 400; >= 99% transverse",
        },
        Fixture {
            name: "sl2z-stationary",
            kind: "stationary",
            json: include_str!("../fixtures/sl2z-stationary.json"),
            expected: "refresh < 3 sigma; proper (exponent > 0 at 95%); contraction < 0.01",
        },
        Fixture {
            name: "reducible-upper",
            kind: "stationary",
            json: include_str!("../fixtures/reducible-upper.json"),
            expected: "not proper: invariant line e1 carries mass >= 0.5 at all eps",
        },
        Fixture {
            name: "f2-martingale",
            kind: "boundary",
            json: include_str!("../fixtures/f2-martingale.json"),
            expected: "fraction >= 0.95 at n = 200; nu(a) = 0.25, nu(ab) = 1/12 within 3 sigma",
        },
        Fixture {
            name: "f2-z3-skew",
            kind: "skew",
            json: include_str!("../fixtures/f2-z3-skew.json"),
            expected: "product-cylinder Birkhoff averages within 3 sigma of product values",
        },
    ]
}

pub fn table() -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<18} {:<11} {}\n",
        "fixture", "experiment", "expected"
    ));
    for f in all() {
        out.push_str(&format!("{:<18} {:<11} {}\n", f.name, f.kind, f.expected));
    }
    out
}
