//! Reconstruction filter banks for the supported wavelet families.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Names accepted by [`load_wavelet`].
pub const SUPPORTED: [&str; 7] = ["haar", "db4", "db6", "db7", "db8", "sym5", "bior3.9"];

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

/// Daubechies, 4 vanishing moments.
const DB4: [f64; 8] = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];

const DB6: [f64; 12] = [
    0.11154074335010947,
    0.49462389039845306,
    0.7511339080210954,
    0.31525035170919763,
    -0.22626469396543983,
    -0.12976686756726194,
    0.09750160558732304,
    0.027522865530305727,
    -0.03158203931748603,
    0.0005538422011614961,
    0.004777257510945511,
    -0.0010773010853084796,
];

const DB7: [f64; 14] = [
    0.07785205408500918,
    0.3965393194819173,
    0.7291320908462351,
    0.4697822874051931,
    -0.14390600392856498,
    -0.22403618499387498,
    0.07130921926683026,
    0.08061260915108308,
    -0.03802993693501441,
    -0.01657454163066688,
    0.01255099855609984,
    0.0004295779729213665,
    -0.0018016407040474908,
    0.00035371379997452024,
];

const DB8: [f64; 16] = [
    0.05441584224310401,
    0.31287159091429995,
    0.6756307362972898,
    0.5853546836542067,
    -0.015829105256349306,
    -0.2840155429615469,
    0.0004724845739132828,
    0.12874742662047847,
    -0.017369301001807547,
    -0.044088253930794755,
    0.013981027917398282,
    0.008746094047405777,
    -0.004870352993451574,
    -0.00039174037337694705,
    0.0006754494064505693,
    -0.00011747678412476953,
];

/// Least-asymmetric Daubechies, 5 vanishing moments.
const SYM5: [f64; 10] = [
    0.019538882735286728,
    -0.021101834024758855,
    -0.17532808990845047,
    0.01660210576452232,
    0.6339789634582119,
    0.7234076904024206,
    0.1993975339773936,
    -0.039134249302383094,
    0.029519490925774643,
    0.027333068345077982,
];

/// Quadratic B-spline synthesis lowpass, zero padded to the length of its dual.
const BIOR39_LOW: [f64; 20] = [
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    0.1767766952966369,
    0.5303300858899106,
    0.5303300858899106,
    0.1767766952966369,
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
    0.0,
];

/// Analysis lowpass dual to [`BIOR39_LOW`]; the synthesis highpass mirrors it.
const BIOR39_DUAL_LOW: [f64; 20] = [
    -0.0006797443727836989,
    0.002039233118351097,
    0.005060319219611981,
    -0.020618912641105536,
    -0.014112787930175844,
    0.09913478249423216,
    0.012300136269419315,
    -0.32019196836077857,
    0.0020500227115698858,
    0.9421257006782068,
    0.9421257006782068,
    0.0020500227115698858,
    -0.32019196836077857,
    0.012300136269419315,
    0.09913478249423216,
    -0.014112787930175844,
    -0.020618912641105536,
    0.005060319219611981,
    0.002039233118351097,
    -0.0006797443727836989,
];

/// A named wavelet's synthesis filter pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletSpec {
    pub name: String,
    /// Scaling filter, normalized so the taps sum to sqrt(2).
    pub lowpass: Vec<f64>,
    /// Wavelet filter, the quadrature mirror of the (dual) lowpass.
    pub highpass: Vec<f64>,
    /// False for biorthogonal families, whose lowpass is not self-orthogonal.
    pub orthogonal: bool,
}

impl WaveletSpec {
    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }

    /// Width of the wavelet support in natural units.
    pub fn support_width(&self) -> f64 {
        (self.lowpass.len().max(self.highpass.len()) - 1) as f64
    }
}

/// g[k] = (-1)^k h[N-1-k]
pub fn quadrature_mirror(h: &[f64]) -> Vec<f64> {
    let n = h.len();
    (0..n)
        .map(|k| {
            let v = h[n - 1 - k];
            if k % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect()
}

/// Looks up a wavelet by name (case-insensitive).
pub fn load_wavelet(name: &str) -> Result<WaveletSpec> {
    let key = name.trim().to_ascii_lowercase();
    let (lowpass, dual): (&[f64], Option<&[f64]>) = match key.as_str() {
        "haar" | "db1" => (&HAAR, None),
        "db4" => (&DB4, None),
        "db6" => (&DB6, None),
        "db7" => (&DB7, None),
        "db8" => (&DB8, None),
        "sym5" => (&SYM5, None),
        "bior3.9" => (&BIOR39_LOW, Some(&BIOR39_DUAL_LOW)),
        _ => return Err(Error::UnknownWavelet(name.to_string())),
    };
    let highpass = quadrature_mirror(dual.unwrap_or(lowpass));
    Ok(WaveletSpec {
        name: if key == "db1" { "haar".into() } else { key },
        lowpass: lowpass.to_vec(),
        highpass,
        orthogonal: dual.is_none(),
    })
}
