//! Exact coefficient tables for the asymptotic eigenvalue expansion and the
//! closed-form coefficient families feeding the eigenvector ansatz.
//!
//! Everything in this module is exact rational arithmetic. The only float
//! ever produced is the final conversion in `eigenvalue_series_value`.

use crate::error::{Error, Result};
use crate::hatpoly::HatPolynomial;
use crate::rational::{
    factorial, int, odd_double_factorial, over_pow2, pow2, rat, rat_str, to_f64, Rational,
};
use num::bigint::BigInt;
use num::traits::{One, Zero};
use once_cell::sync::Lazy;
use serde_json::{json, Value};

/// Highest eigenvalue order stored for an arbitrary state index.
pub const MAX_EIGENVALUE_ORDER: u32 = 16;
/// Highest eigenvalue order stored for the ground state.
pub const MAX_GROUND_EIGENVALUE_ORDER: u32 = 31;
/// Exponential-part coefficients exist for every slot with l at most this.
pub const MAX_COMPLETE_ALPHA_ORDER: u32 = 9;
/// Polynomial-part coefficients are stored for l at most this.
pub const MAX_BETA_ORDER: u32 = 7;

/// Eigenvalue expansion denominators: term m carries 1/2^(these), m = 2..16.
/// The exponents are irregular and stored verbatim.
const D_DENOM_POW2: [u32; 15] = [6, 11, 17, 23, 27, 33, 40, 47, 51, 57, 61, 69, 72, 79, 87];

/// Numerator polynomials in 2n+1 for eigenvalue terms m = 2..16,
/// highest power first, stepping down by two (pure parity in 2n+1).
const D_COEFFS: [&[i128]; 15] = [
    &[1, 1],
    &[1, 3],
    &[5, 34, 9],
    &[33, 410, 405],
    &[63, 1260, 2943, 486],
    &[527, 15617, 69001, 41607],
    &[9387, 388780, 2845898, 4021884, 506979],
    &[175045, 9702612, 107798166, 288161796, 130610637],
    &[422565, 30315780, 480439190, 2135766820, 2249346285, 238353840],
    &[4194753, 379291385, 8186829426, 55529955498, 110241863469, 41540033277],
    &[
        10645960,
        1187264199,
        33678377895,
        327725946398,
        1081358909790,
        940077055035,
        88258370067,
    ],
    &[
        440374207,
        59495737574,
        2155821044201,
        28738150160500,
        144821249264769,
        236410740537606,
        78243613727607,
    ],
    &[
        578183175,
        93209584104,
        4215683624295,
        74269604367684,
        537905750769429,
        1456767306013752,
        1105711550410653,
        94839535889532,
    ],
    &[
        12308013927,
        2337227706555,
        129437253243675,
        2928506455684095,
        29119560960614085,
        120372998803922241,
        170921920649402745,
        51316344023990085,
    ],
    &[
        530039126159,
        117243302735480,
        7823093961425652,
        222043810819026856,
        2924952921130025194,
        17380315268028265224,
        40851669411526600980,
        27983551470330365784,
        2235152520630714879,
    ],
];

/// Ground-state eigenvalue terms m = 17..31 as (numerator, power-of-two
/// denominator); each enters the series with a minus sign.
const GROUND_EXTENSION: [(&str, u32); 15] = [
    ("363372562420411197", 79),
    ("6258692522467212813", 83),
    ("227867608383920243815", 88),
    ("4372199488222446620121", 92),
    ("352807992522448740907163", 98),
    ("7465886451386334274097895", 102),
    ("330752735437897260202410959", 107),
    ("7654237307570898665851927581", 111),
    ("1477812451863756884805687589129", 118),
    ("37132718819258763418452357390369", 122),
    ("1939848955425261040700592191917783", 128),
    ("52598573101029275526869814635336865", 131),
    ("5914101566562517015636997146651378649", 137),
    ("172129355454985486683952198830698506149", 141),
    ("10362392343003738344189045786484697182753", 146),
];

/// Polynomial-part bracket tables for l = 2..7, even state index.
/// Entry i of the outer list multiplies (floor(n/2))^i; each inner row lists
/// coefficients of k^1, k^2, ... with no constant term.
const BETA_EVEN_BRACKETS: [(&[&[i128]], i128); 6] = [
    (&[&[3, -1], &[10]], 48),
    (
        &[&[855, -64, -14, 5], &[784, 48, -100], &[1316, 500]],
        23040,
    ),
    (
        &[
            &[371385, -203498, -12129, 1438],
            &[1110698, 102042, -26252],
            &[496932, 93984],
            &[560200],
        ],
        23224320,
    ),
    (
        &[
            &[278751375, -202014918, 35222268, 4026748, 28158, -9944],
            &[713250468, -281790420, -61452368, -196176, 209856],
            &[1105743252, 198178852, -10630680, -275344],
            &[319197168, 81282336, -22799744],
            &[271672512, 148408976],
        ],
        22295347200,
    ),
    (
        &[
            &[
                134035780725,
                -166751340588,
                39327194883,
                -2269605874,
                -477614210,
                -19226552,
                221782,
                484,
            ],
            &[
                413990823078,
                -217584747090,
                22678956764,
                8841166604,
                479019924,
                -6549884,
                566984,
            ],
            &[
                526339688532,
                -155591533528,
                -55003198072,
                -3518713436,
                85514000,
                -24903296,
            ],
            &[
                556945898088,
                131085561976,
                2790556248,
                -280060176,
                424040144,
            ],
            &[116760015552, 34523271136, -5865150192, -3338174576],
            &[79966766400, 46102886720, 10162787360],
        ],
        11771943321600,
    ),
    (
        &[
            &[
                21167446950775125,
                -34318046368345140,
                13674300462898392,
                -1352901404372446,
                -2843855572731,
                11311875159790,
                704407032828,
                12949326156,
                -177366189,
                37677640,
            ],
            &[
                59570630372492640,
                -60644270495554704,
                10066261151648252,
                104602336760652,
                -246415137367020,
                -20207362771548,
                -460168946016,
                2604105504,
                -2483040560,
            ],
            &[
                99669485611466412,
                -39020273844707836,
                2200698814542984,
                2070713072954600,
                212428368788100,
                5622413614220,
                82814211480,
                70784553840,
            ],
            &[
                82488078028378080,
                -18442822328400480,
                -9100818756007520,
                -964844434165920,
                -24156442527360,
                -3013682511840,
                -1116228072960,
            ],
            &[
                66588038149135200,
                18345507366303440,
                1191268975557840,
                10518809509520,
                42474114642960,
                10244315921840,
            ],
            &[
                10839030004200960,
                3516288982521792,
                -363895953410496,
                -304221200739456,
                -51610667908800,
            ],
            &[
                6218212960526208,
                3705496740373376,
                898601964676416,
                110684037464000,
            ],
        ],
        1542595452862464000,
    ),
];

/// Additive shift applied on top of the even table when the state index is
/// odd; same layout as `BETA_EVEN_BRACKETS`.
const BETA_ODD_BRACKETS: [(&[&[i128]], i128); 6] = [
    (&[&[1]], 12),
    (&[&[249, 49, -20], &[532, 200]], 11520),
    (
        &[&[67680, 12347, -2602], &[108544, 33762], &[114456]],
        3870720,
    ),
    (
        &[
            &[119817225, -23468037, -12060122, -330312, 100198],
            &[436319556, 103769756, -5886336, -1921112],
            &[321608148, 118383396, -904080],
            &[224147856, 120486304],
        ],
        11147673600,
    ),
    (
        &[
            &[
                34460588160,
                -26910050283,
                72069996,
                1282383895,
                103465570,
                -948002,
                -316976,
            ],
            &[
                216801198648,
                -21671791146,
                -18471533106,
                -1699322576,
                78651584,
                5865684,
            ],
            &[
                345295895928,
                96181762100,
                1478206984,
                -1409258180,
                60822872,
            ],
            &[160052617776, 64547633160, 3204992824, -1898232512],
            &[83156900448, 47130830560, 10276562912],
        ],
        5885971660800,
    ),
    (
        &[
            &[
                -460686821541975,
                -1941941074537755,
                366877584331212,
                41494582964306,
                -9965970910165,
                -1112954021925,
                -34972438722,
                958101144,
                3798795,
            ],
            &[
                9145976126266080,
                -3823250702059872,
                -191143081971676,
                173415983605096,
                24948282593576,
                815890000796,
                -41300603344,
                1974092120,
            ],
            &[
                19045045703842332,
                -607795420829248,
                -1422456568355676,
                -195873935369616,
                -2655255816252,
                611948653316,
                -98001423520,
            ],
            &[
                18941405236672032,
                5863460843089248,
                345511721120640,
                -55753844615456,
                -654723253184,
                1792716525600,
            ],
            &[
                6296099301099168,
                2692631923242160,
                232744611197904,
                -59049744898144,
                -14606140268720,
            ],
            &[
                2605202959125888,
                1525593370591680,
                365590616623232,
                44670372947200,
            ],
        ],
        257099242143744000,
    ),
];

/// Printed exponential-part coefficients beyond the seven closed-form
/// diagonal families.
pub struct AlphaExtras {
    /// Slot (k, l) = (1, 8) as a polynomial in 2n+1.
    pub alpha_1_8: HatPolynomial,
    /// Slot (k, l) = (1, 9) as a polynomial in 2n+1.
    pub alpha_1_9: HatPolynomial,
    /// Slot (k, l) = (2, 9) as a polynomial in 2n+1.
    pub alpha_2_9: HatPolynomial,
    /// Ground-state value at slot (k, l) = (1, 30).
    pub ground_alpha_1_30: Rational,
}

/// Immutable store of every tabulated coefficient. All access is read-only
/// and safe to share across threads.
pub struct CoefficientTables {
    eigenvalue_terms: Vec<HatPolynomial>,
    ground_state_extension: Vec<Rational>,
    alpha_extras: AlphaExtras,
}

static TABLES: Lazy<CoefficientTables> = Lazy::new(build_tables);

/// Shared handle to the coefficient store.
pub fn tables() -> &'static CoefficientTables {
    &TABLES
}

fn build_tables() -> CoefficientTables {
    let mut eigenvalue_terms = Vec::with_capacity(17);
    eigenvalue_terms.push(HatPolynomial::constant(int(-1)));
    eigenvalue_terms.push(HatPolynomial::new(vec![int(0), rat(1, 2)]));
    for (i, coeffs) in D_COEFFS.iter().enumerate() {
        let m = i + 2;
        let den = D_DENOM_POW2[i];
        let mut c = vec![Rational::zero(); m + 1];
        for (j, &d) in coeffs.iter().enumerate() {
            c[m - 2 * j] = -over_pow2(d, den);
        }
        eigenvalue_terms.push(HatPolynomial::new(c));
    }

    let ground_state_extension = GROUND_EXTENSION
        .iter()
        .map(|&(num, den)| -Rational::new(num.parse().expect("integer literal"), pow2(den)))
        .collect();

    CoefficientTables {
        eigenvalue_terms,
        ground_state_extension,
        alpha_extras: AlphaExtras {
            alpha_1_8: alpha_1_8_poly(),
            alpha_1_9: alpha_1_9_poly(),
            alpha_2_9: alpha_2_9_poly(),
            ground_alpha_1_30: rat_str(
                "-5207328980459439428858189871778019425519567564728193",
                "2765292404617797269550429065808396826741571584",
            ),
        },
    }
}

fn alpha_1_8_poly() -> HatPolynomial {
    let mut c = vec![Rational::zero(); 8];
    c[0] = over_pow2(2741702, 32);
    c[1] = over_pow2(-505549159, 37);
    c[2] = over_pow2(-12248825, 32);
    c[3] = over_pow2(-177209155, 37);
    c[4] = over_pow2(-1518052, 32);
    c[5] = over_pow2(-8289645, 37);
    c[6] = over_pow2(-26073, 32);
    c[7] = over_pow2(-40329, 37);
    HatPolynomial::new(c)
}

fn alpha_1_9_poly() -> HatPolynomial {
    let third = |n: i128| over_pow2(n, 47) / int(3);
    let mut c = vec![Rational::zero(); 9];
    c[0] = third(840819020949);
    c[1] = over_pow2(-1318785849, 38);
    c[2] = third(-1419128841068);
    c[3] = over_pow2(-459389255, 38);
    c[4] = third(-221074444682);
    c[5] = over_pow2(-29718111, 38);
    c[6] = third(-6195597884);
    c[7] = over_pow2(-335617, 38);
    c[8] = third(-21259875);
    HatPolynomial::new(c)
}

fn alpha_2_9_poly() -> HatPolynomial {
    let mut c = vec![Rational::zero(); 8];
    c[0] = over_pow2(48228434, 34);
    c[1] = over_pow2(131257276187, 44);
    c[2] = over_pow2(93959845, 34);
    c[3] = over_pow2(37843099187, 44);
    c[4] = over_pow2(8787700, 34);
    c[5] = over_pow2(1323046497, 44);
    c[6] = over_pow2(110661, 34);
    c[7] = over_pow2(4456305, 44);
    HatPolynomial::new(c)
}

impl CoefficientTables {
    /// Eigenvalue expansion terms m = 0..16 as polynomials in 2n+1.
    pub fn eigenvalue_terms(&self) -> &[HatPolynomial] {
        &self.eigenvalue_terms
    }

    /// Ground-state eigenvalue terms m = 17..31.
    pub fn ground_state_extension(&self) -> &[Rational] {
        &self.ground_state_extension
    }

    pub fn alpha_extras(&self) -> &AlphaExtras {
        &self.alpha_extras
    }

    /// Full table dump with numerator/denominator strings, for external
    /// auditing without precision loss.
    pub fn dump_json(&self) -> Value {
        json!({
            "eigenvalue_terms": self
                .eigenvalue_terms
                .iter()
                .enumerate()
                .map(|(m, p)| json!({ "order": m, "coefficients": poly_json(p) }))
                .collect::<Vec<_>>(),
            "ground_state_extension": self
                .ground_state_extension
                .iter()
                .enumerate()
                .map(|(i, v)| json!({ "order": i + 17, "value": rat_json(v) }))
                .collect::<Vec<_>>(),
            "alpha_extras": {
                "alpha_1_8": poly_json(&self.alpha_extras.alpha_1_8),
                "alpha_1_9": poly_json(&self.alpha_extras.alpha_1_9),
                "alpha_2_9": poly_json(&self.alpha_extras.alpha_2_9),
                "ground_alpha_1_30": rat_json(&self.alpha_extras.ground_alpha_1_30),
            },
            "beta_even_brackets": beta_rows_json(&BETA_EVEN_BRACKETS),
            "beta_odd_addend_brackets": beta_rows_json(&BETA_ODD_BRACKETS),
        })
    }
}

fn rat_json(r: &Rational) -> Value {
    json!([r.numer().to_string(), r.denom().to_string()])
}

fn poly_json(p: &HatPolynomial) -> Value {
    Value::Array(p.coefficients().iter().map(rat_json).collect())
}

fn beta_rows_json(tables: &[(&[&[i128]], i128)]) -> Value {
    Value::Array(
        tables
            .iter()
            .enumerate()
            .map(|(i, (rows, den))| {
                json!({
                    "l": i + 2,
                    "denominator": den.to_string(),
                    "rows": rows
                        .iter()
                        .map(|row| row.iter().map(|c| c.to_string()).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

/// r(k, l) = (2k-1)!! / (2^k (k+l-1)!), the gamma-function ratio
/// Gamma(k+1/2) / (sqrt(pi) Gamma(k+l)) in exact rational form.
pub fn gamma_half_ratio(k: u32, l: u32) -> Result<Rational> {
    if k == 0 || l == 0 {
        return Err(Error::invalid("gamma ratio requires k >= 1 and l >= 1"));
    }
    Ok(gamma_ratio(k, l))
}

fn gamma_ratio(k: u32, l: u32) -> Rational {
    Rational::new(
        odd_double_factorial(k as u64),
        pow2(k) * factorial((k + l - 1) as u64),
    )
}

/// Coefficient of the power n + 2(k - floor(n/2)) in the n-th Hermite
/// polynomial (physicists' normalisation).
pub fn hermite_coefficient(n: u64, k: u64) -> Result<Rational> {
    let k_prime = n / 2;
    if k > k_prime {
        return Err(Error::invalid(format!(
            "hermite index k = {k} exceeds floor(n/2) = {k_prime}"
        )));
    }
    let odd = n % 2;
    let sign = if (k_prime + k).is_multiple_of(2) { 1 } else { -1 };
    let num = BigInt::from(sign) * pow2((2 * k + odd) as u32) * factorial(n);
    let den = factorial(2 * k + odd) * factorial(k_prime - k);
    Ok(Rational::new(num, den))
}

/// Exact eigenvalue expansion term: the coefficient of omega^m in the
/// asymptotic eigenvalue of state n. Terms beyond m = 16 exist only for
/// the ground state.
pub fn eigenvalue_coefficient(n: u64, m: u32) -> Result<Rational> {
    let t = tables();
    if m <= MAX_EIGENVALUE_ORDER {
        return Ok(t.eigenvalue_terms[m as usize].eval_at_n(n));
    }
    if n == 0 && m <= MAX_GROUND_EIGENVALUE_ORDER {
        return Ok(t.ground_state_extension[(m - 17) as usize].clone());
    }
    Err(Error::out_of_table(format!(
        "eigenvalue term m = {m} is not stored for n = {n}"
    )))
}

/// Partial sum of the eigenvalue expansion through omega^m_max. The sum is
/// carried out in exact rationals (omega converted to its exact binary
/// value) and rounded once at the end.
pub fn eigenvalue_series_value(n: u64, m_max: u32, omega: f64) -> Result<f64> {
    if !omega.is_finite() || omega <= 0.0 {
        return Err(Error::invalid(format!(
            "omega must be positive and finite, got {omega}"
        )));
    }
    let limit = if n == 0 {
        MAX_GROUND_EIGENVALUE_ORDER
    } else {
        MAX_EIGENVALUE_ORDER
    };
    if m_max > limit {
        return Err(Error::out_of_table(format!(
            "series order {m_max} exceeds stored terms for n = {n}"
        )));
    }
    let w = Rational::from_float(omega).expect("finite float is an exact rational");
    let mut acc = Rational::zero();
    for m in (0..=m_max).rev() {
        acc = acc * &w + eigenvalue_coefficient(n, m)?;
    }
    Ok(to_f64(&acc))
}

/// Exponential-part coefficient for the slot omega^(l-1) xi^(2k).
///
/// Closed forms cover every slot with l - k <= 6; the printed slots (1,8),
/// (1,9), (2,9) extend full coverage to l <= 9. The single stored
/// ground-state value beyond that is (1, 30) at n = 0.
pub fn alpha_coefficient(n: u64, k: u32, l: u32) -> Result<Rational> {
    if k == 0 {
        return Err(Error::invalid("exponential-part index k starts at 1"));
    }
    if l < k {
        return Err(Error::invalid(format!(
            "exponential-part slot requires l >= k, got k = {k}, l = {l}"
        )));
    }
    let delta = l - k;
    if delta <= 6 {
        return Ok(alpha_family(delta, k, n));
    }
    let extras = &tables().alpha_extras;
    match (k, l) {
        (1, 8) => Ok(extras.alpha_1_8.eval_at_n(n)),
        (1, 9) => Ok(extras.alpha_1_9.eval_at_n(n)),
        (2, 9) => Ok(extras.alpha_2_9.eval_at_n(n)),
        (1, 30) if n == 0 => Ok(extras.ground_alpha_1_30.clone()),
        _ => Err(Error::out_of_table(format!(
            "no closed form for exponential slot k = {k}, l = {l} at n = {n}"
        ))),
    }
}

/// 2^exp as an exact rational, exponent of either sign.
fn two_pow(exp: i64) -> Rational {
    if exp >= 0 {
        Rational::from(pow2(exp as u32))
    } else {
        Rational::new(BigInt::one(), pow2((-exp) as u32))
    }
}

fn int_poly(coeffs: &[i128], x: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x + BigInt::from(*c);
    }
    acc
}

/// The seven closed-form diagonal families alpha_{k, k+delta}, delta = 0..6.
fn alpha_family(delta: u32, k: u32, n: u64) -> Rational {
    let nh = int(2 * n as i128 + 1);
    let nh2 = &nh * &nh;
    let nh3 = &nh2 * &nh;
    let nh4 = &nh2 * &nh2;
    let nh5 = &nh4 * &nh;
    let nh6 = &nh4 * &nh2;
    let sign = if k.is_multiple_of(2) { int(1) } else { int(-1) };
    let kb = BigInt::from(k);
    let p = |coeffs: &[i128]| Rational::from(int_poly(coeffs, &kb));
    let ki = k as i64;
    match delta {
        0 => {
            sign * two_pow(2 - 2 * ki) * gamma_ratio(k, 1)
                / int(((2 * k - 1) as i128) * ((2 * k - 1) as i128))
        }
        1 => {
            sign * two_pow(-2 - 2 * ki) * (int(1) + gamma_ratio(k, 1) * &nh) / int(k as i128)
        }
        2 => {
            sign * two_pow(-4 - 2 * ki)
                * (&nh
                    + gamma_ratio(k, 2) / int(24) * (p(&[3, 52, 40]) + p(&[9, 12]) * &nh2))
        }
        3 => {
            sign * two_pow(-9 - 2 * ki)
                * (p(&[-1, 7, 5])
                    + p(&[3, 4]) * &nh2
                    + gamma_ratio(k, 3) / int(24)
                        * (p(&[243, 1119, 1928, 1376, 320]) * &nh
                            + p(&[33, 101, 104, 32]) * &nh3))
        }
        4 => {
            sign * two_pow(-14 - 2 * ki)
                * (p(&[53, 120, 136, 40]) * &nh
                    + p(&[37, 72, 32]) * &nh3 / int(3)
                    + gamma_ratio(k, 4) / int(48)
                        * (p(&[
                            -2612925, -5292132, 10675063, 36766856, 40148416, 21300608,
                            5544448, 565760,
                        ]) / int(315)
                            + p(&[11070, 60044, 130810, 142112, 81280, 23168, 2560]) * &nh2
                            + p(&[585, 2288, 3585, 2696, 960, 128]) * &nh4))
        }
        5 => {
            sign * two_pow(-20 - 2 * ki)
                * (p(&[-5187, -672, 6580, 7684, 3164, 452]) / int(3)
                    + p(&[1214, 3744, 4080, 1968, 320]) * &nh2
                    + p(&[345, 808, 576, 128]) * &nh4 / int(3)
                    + gamma_ratio(k, 5) / int(48)
                        * (p(&[
                            740893230,
                            3944788389,
                            9627147810,
                            14943869467,
                            15287941200,
                            10116675072,
                            4238798592,
                            1079918592,
                            152076288,
                            9052160,
                        ]) * &nh
                            / int(315)
                            + p(&[
                                1825740, 11037114, 27955236, 37919062, 30169312, 14491648,
                                4122880, 636928, 40960,
                            ]) * &nh3
                                / int(3)
                            + p(&[
                                85050, 381087, 729798, 752369, 447024, 152576, 27648, 2048,
                            ]) * &nh5
                                / int(5)))
        }
        6 => {
            sign * two_pow(-26 - 2 * ki)
                * (p(&[378033, 496368, 786528, 710816, 339904, 79552, 7232]) * &nh / int(3)
                    + p(&[69714, 241312, 303392, 177696, 49408, 5120]) * &nh3 / int(3)
                    + p(&[17217, 45360, 40960, 15360, 2048]) * &nh5 / int(15)
                    + gamma_ratio(k, 6) / int(180)
                        * (p(&[
                            -24640192386810,
                            -105728184475128,
                            -155775948330744,
                            -74654535511116,
                            74660144680858,
                            156803802177352,
                            134434233033760,
                            70722102090816,
                            24590691451392,
                            5680345583616,
                            839668527104,
                            71921254400,
                            2714009600,
                        ]) / int(9009)
                            + p(&[
                                22093103970,
                                162201234402,
                                504160865145,
                                882850470198,
                                986932878421,
                                745434338828,
                                388089936864,
                                138972684672,
                                33504543744,
                                5179637760,
                                462565376,
                                18104320,
                            ]) * &nh2
                                / int(21)
                            + p(&[
                                152041050,
                                991922940,
                                2784482730,
                                4353707520,
                                4203836660,
                                2632731680,
                                1088777440,
                                294912320,
                                50245120,
                                4874240,
                                204800,
                            ]) * &nh4
                            + p(&[
                                2606310, 12799746, 27798345, 34245070, 26181505, 12857468,
                                4055200, 792320, 87040, 4096,
                            ]) * &nh6))
        }
        _ => unreachable!("family only defined for delta <= 6"),
    }
}

/// Polynomial-part coefficient for the slot omega^(l-1) at Hermite index k.
///
/// The leading term satisfies beta(n, k, 1) = 1 and normalisation pins
/// beta(n, 0, l) = 0 for l > 1. Printed per-order corrections start at the
/// first omega power, so a first correction named with subscript 1 is this
/// function's l = 2 slot.
pub fn beta_coefficient(n: u64, k: u64, l: u32) -> Result<Rational> {
    let k_prime = n / 2;
    if l == 0 {
        return Err(Error::invalid("polynomial-part order l starts at 1"));
    }
    if k > k_prime {
        return Err(Error::invalid(format!(
            "polynomial index k = {k} exceeds floor(n/2) = {k_prime}"
        )));
    }
    if l == 1 {
        return Ok(int(1));
    }
    if k == 0 {
        return Ok(Rational::zero());
    }
    if l > MAX_BETA_ORDER {
        return Err(Error::out_of_table(format!(
            "polynomial-part coefficients are stored for l <= {MAX_BETA_ORDER}, got l = {l}"
        )));
    }
    let idx = (l - 2) as usize;
    let (rows, den) = BETA_EVEN_BRACKETS[idx];
    let mut value = Rational::new(bracket_value(rows, k, k_prime), BigInt::from(den));
    if l >= 4 {
        value = value
            + leading_beta_block(BetaBlockKind::Even, l, 2 * l - 2, k, k_prime)?
            + leading_beta_block(BetaBlockKind::Even, l, 2 * l - 3, k, k_prime)?;
    }
    if n % 2 == 1 {
        let (rows, den) = BETA_ODD_BRACKETS[idx];
        value += Rational::new(bracket_value(rows, k, k_prime), BigInt::from(den));
        if l >= 4 {
            value = value
                + leading_beta_block(BetaBlockKind::OddDifference, l, 2 * l - 3, k, k_prime)?
                + leading_beta_block(BetaBlockKind::OddDifference, l, 2 * l - 4, k, k_prime)?;
        }
    }
    Ok(value)
}

fn bracket_value(rows: &[&[i128]], k: u64, k_prime: u64) -> BigInt {
    let kb = BigInt::from(k);
    let kpb = BigInt::from(k_prime);
    let mut acc = BigInt::zero();
    let mut kp_pow = BigInt::one();
    for row in rows {
        acc += &kp_pow * &kb * int_poly(row, &kb);
        kp_pow *= &kpb;
    }
    acc
}

/// Which of the two leading-block families to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaBlockKind {
    /// Blocks entering the even-state tables.
    Even,
    /// Difference blocks entering the odd-state addend.
    OddDifference,
}

/// Leading blocks of the polynomial-part tables for l = 4..7. The second
/// index selects the block: 2l-2 or 2l-3 for the even family, 2l-3 or 2l-4
/// for the difference family.
pub fn leading_beta_block(
    kind: BetaBlockKind,
    l: u32,
    second_index: u32,
    k: u64,
    k_prime: u64,
) -> Result<Rational> {
    if !(4..=7).contains(&l) {
        return Err(Error::invalid(format!(
            "leading blocks are defined for l = 4..7, got l = {l}"
        )));
    }
    let kb = BigInt::from(k);
    let kpb = BigInt::from(k_prime);
    let lever = BigInt::from(10u32) * &kpb - &kb;
    let li = l as i128;
    match (kind, second_index) {
        (BetaBlockKind::Even, s) if s == 2 * l - 2 => {
            let num = kb.pow(l - 1) * lever.pow(l - 1);
            let den = BigInt::from(48).pow(l - 1) * factorial((l - 1) as u64);
            Ok(Rational::new(num, den))
        }
        (BetaBlockKind::Even, s) if s == 2 * l - 3 => {
            let quad = BigInt::from((li - 2) * 658) * &kpb * &kpb
                + BigInt::from(402 - 126 * li) * &kpb * &kb
                + BigInt::from(8 * li - 31) * &kb * &kb;
            let num = kb.pow(l - 2) * lever.pow(l - 3) * quad;
            let den = BigInt::from(5) * BigInt::from(48).pow(l - 1) * factorial((l - 2) as u64);
            Ok(Rational::new(num, den))
        }
        (BetaBlockKind::OddDifference, s) if s == 2 * l - 3 => {
            // Power l-1 on the 48, matching the even-family leading block.
            // The printed l-2 fails the order-by-order rederivation for every
            // odd state with l >= 4 and caps the measured wavefunction
            // convergence at omega^3; with l-1 both checks come out exact.
            let num = BigInt::from(4) * kb.pow(l - 1) * lever.pow(l - 2);
            let den = BigInt::from(48).pow(l - 1) * factorial((l - 2) as u64);
            Ok(Rational::new(num, den))
        }
        (BetaBlockKind::OddDifference, s) if s == 2 * l - 4 => {
            let quad = BigInt::from(2632 * li - 2576) * &kpb * &kpb
                + BigInt::from(1470 - 504 * li) * &kpb * &kb
                + BigInt::from(32 * li - 145) * &kb * &kb;
            let num = kb.pow(l - 2) * lever.pow(l - 4) * quad;
            let den = BigInt::from(5) * BigInt::from(48).pow(l - 1) * factorial((l - 3) as u64);
            Ok(Rational::new(num, den))
        }
        _ => Err(Error::invalid(format!(
            "no leading block {kind:?} with indices ({l}, {second_index})"
        ))),
    }
}
