//! Kingsbury filter tables.
//!
//! Coefficients are the published `near_sym_b` (13/19-tap near-symmetric
//! biorthogonal) and `qshift_b` (14-tap quarter-shift) sets as distributed
//! with Kingsbury's DT-CWT MATLAB toolbox (`near_sym_b.mat`, `qshift_b.mat`).

/// Identifier of the level-1 biorthogonal set.
pub const BIORT_NAME: &str = "near_sym_b";
/// Identifier of the quarter-shift set used from level 2 on.
pub const QSHIFT_NAME: &str = "qshift_b";

const H0O: [f64; 13] = [
    -0.0017578125,
    0.0,
    0.022265625,
    -0.046875,
    -0.0482421875,
    0.296875,
    0.55546875,
    0.296875,
    -0.0482421875,
    -0.046875,
    0.022265625,
    0.0,
    -0.0017578125,
];

const G0O: [f64; 19] = [
    7.062639508928571e-05,
    0.0,
    -0.0013419015066964285,
    -0.0018833705357142855,
    0.007156808035714285,
    0.023856026785714284,
    -0.05564313616071428,
    -0.05168805803571428,
    0.29975760323660716,
    0.5594308035714286,
    0.29975760323660716,
    -0.05168805803571428,
    -0.05564313616071428,
    0.023856026785714284,
    0.007156808035714285,
    -0.0018833705357142855,
    -0.0013419015066964285,
    0.0,
    7.062639508928571e-05,
];

const H1O: [f64; 19] = [
    -7.062639508928571e-05,
    0.0,
    0.0013419015066964285,
    -0.0018833705357142855,
    -0.007156808035714285,
    0.023856026785714284,
    0.05564313616071428,
    -0.05168805803571428,
    -0.29975760323660716,
    0.5594308035714286,
    -0.29975760323660716,
    -0.05168805803571428,
    0.05564313616071428,
    0.023856026785714284,
    -0.007156808035714285,
    -0.0018833705357142855,
    0.0013419015066964285,
    0.0,
    -7.062639508928571e-05,
];

const G1O: [f64; 13] = [
    -0.0017578125,
    0.0,
    0.022265625,
    0.046875,
    -0.0482421875,
    -0.296875,
    0.55546875,
    -0.296875,
    -0.0482421875,
    0.046875,
    0.022265625,
    0.0,
    -0.0017578125,
];

const H0A: [f64; 14] = [
    0.003253142763653182,
    -0.00388321199915849,
    0.03466034684485349,
    -0.03887280126882779,
    -0.11720388769911527,
    0.27529538466888204,
    0.7561456438925225,
    0.5688104207121227,
    0.011866092033797,
    -0.1067118046866654,
    0.023825384794920298,
    0.01702522388155399,
    -0.005439475937274115,
    -0.004556895628475491,
];

const H1A: [f64; 14] = [
    -0.004556895628475491,
    0.005439475937274115,
    0.01702522388155399,
    -0.023825384794920298,
    -0.1067118046866654,
    -0.011866092033797,
    0.5688104207121227,
    -0.7561456438925225,
    0.27529538466888204,
    0.11720388769911527,
    -0.03887280126882779,
    -0.03466034684485349,
    -0.00388321199915849,
    -0.003253142763653182,
];

/// Analysis/synthesis filter pair for one tree.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

/// Quarter-shift filters for both trees.
#[derive(Debug, Clone, PartialEq)]
pub struct QshiftPairs {
    pub tree_a: FilterPair,
    pub tree_b: FilterPair,
}

/// Complete DT-CWT filter bank.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub level1_analysis: FilterPair,
    pub level1_synthesis: FilterPair,
    pub qshift_analysis: QshiftPairs,
    pub qshift_synthesis: QshiftPairs,
}

fn reversed(h: &[f64]) -> Vec<f64> {
    h.iter().rev().copied().collect()
}

impl FilterBank {
    /// `near_sym_b` at level 1 and `qshift_b` beyond.
    pub fn kingsbury() -> Self {
        // Tree B is the time reverse of tree A; synthesis filters are the
        // time reverses of the analysis filters of the same tree.
        let h0b = reversed(&H0A);
        let h1b = reversed(&H1A);
        Self {
            level1_analysis: FilterPair {
                low: H0O.to_vec(),
                high: H1O.to_vec(),
            },
            level1_synthesis: FilterPair {
                low: G0O.to_vec(),
                high: G1O.to_vec(),
            },
            qshift_analysis: QshiftPairs {
                tree_a: FilterPair {
                    low: H0A.to_vec(),
                    high: H1A.to_vec(),
                },
                tree_b: FilterPair {
                    low: h0b.clone(),
                    high: h1b.clone(),
                },
            },
            qshift_synthesis: QshiftPairs {
                tree_a: FilterPair {
                    low: h0b,
                    high: h1b,
                },
                tree_b: FilterPair {
                    low: H0A.to_vec(),
                    high: H1A.to_vec(),
                },
            },
        }
    }

    pub fn identifiers() -> (&'static str, &'static str) {
        (BIORT_NAME, QSHIFT_NAME)
    }
}

impl Default for FilterBank {
    fn default() -> Self {
        Self::kingsbury()
    }
}
