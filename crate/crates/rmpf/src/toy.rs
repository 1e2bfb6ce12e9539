//! Built-in small-parameter fixture: one fully worked two-party agreement
//! at `p = 104729`, shape `5x3`, with every intermediate value pinned.
//!
//! The constants double as golden vectors: tests and the `vectors` CLI
//! command recompute the session from [`ALICE_SCALARS`]/[`BOB_SCALARS`]
//! and compare cell by cell against the matrices recorded here.

use crate::error::Result;
use crate::kap::{PrivateKey, PublicParams};
use crate::matrix::{BaseMatrix, Dims};

pub const PRIME: u64 = 104_729;
pub const ROWS: usize = 5;
pub const COLS: usize = 3;

/// Public base matrix `W`.
pub const BASE: [[u64; COLS]; ROWS] = [
    [51141, 16202, 66646],
    [4601, 73510, 9641],
    [41977, 29822, 28262],
    [61281, 20522, 40337],
    [25689, 35123, 17039],
];

/// Public left exponent matrix `X`.
pub const PUBLIC_X: [[u64; COLS]; ROWS] = [
    [27536, 23259, 3230],
    [97577, 61064, 52197],
    [61356, 19870, 66794],
    [93047, 74112, 73769],
    [88730, 84531, 46584],
];

/// Public right exponent matrix `Y`.
pub const PUBLIC_Y: [[u64; COLS]; ROWS] = [
    [7991, 99112, 88031],
    [62951, 45825, 26429],
    [53671, 81823, 10939],
    [92791, 39779, 100242],
    [67646, 52695, 65391],
];

/// Alice's secret scalars `(lambda, omega)`.
pub const ALICE_SCALARS: (u64, u64) = (35_413, 22_911);

/// Bob's secret scalars `(lambda, omega)`.
pub const BOB_SCALARS: (u64, u64) = (77_591, 9_608);

/// `lambda_A * X` before reduction mod `p - 1`.
pub const ALICE_LEFT_RAW: [[u64; COLS]; ROWS] = [
    [975132368, 823670967, 114383990],
    [3455494301, 2162459432, 1848452361],
    [2172800028, 703656310, 2365375922],
    [3295073411, 2624528256, 2612381597],
    [3142195490, 2993496303, 1649679192],
];

/// `omega_A * Y` before reduction mod `p - 1`.
pub const ALICE_RIGHT_RAW: [[u64; COLS]; ROWS] = [
    [183081801, 2270755032, 2016878241],
    [1442270361, 1049896575, 605514819],
    [1229656281, 1874646753, 250623429],
    [2125934601, 911376669, 2296644462],
    [1549837506, 1207295145, 1498173201],
];

/// `lambda_B * X` before reduction mod `p - 1`.
pub const BOB_LEFT_RAW: [[u64; COLS]; ROWS] = [
    [2136545776, 1804689069, 250618930],
    [7571097007, 4738016824, 4050017427],
    [4760673396, 1541733170, 5182613254],
    [7219609777, 5750424192, 5723810479],
    [6884649430, 6558844821, 3614499144],
];

/// `omega_B * Y` before reduction mod `p - 1`.
pub const BOB_RIGHT_RAW: [[u64; COLS]; ROWS] = [
    [76777528, 952268096, 845801848],
    [604833208, 440286600, 253929832],
    [515670968, 786155384, 105101912],
    [891535928, 382196632, 963125136],
    [649942768, 506293560, 628276728],
];

/// Alice's token: the two-sided action of her secret pair on [`BASE`].
pub const ALICE_TOKEN: [[u64; COLS]; ROWS] = [
    [90444, 78140, 22111],
    [91141, 86834, 31963],
    [22517, 82376, 27232],
    [76737, 17315, 37169],
    [95799, 99846, 20180],
];

/// Bob's token.
pub const BOB_TOKEN: [[u64; COLS]; ROWS] = [
    [25880, 18100, 3262],
    [66621, 6366, 37099],
    [77233, 4706, 92229],
    [41946, 98748, 61670],
    [61540, 92962, 89447],
];

/// The agreed matrix both sides compute from the other's token.
pub const SHARED_MATRIX: [[u64; COLS]; ROWS] = [
    [76099, 14814, 8343],
    [58724, 39308, 74495],
    [26031, 18945, 38075],
    [90635, 51524, 65266],
    [23296, 83580, 22846],
];

/// Session key for [`SHARED_MATRIX`] under the zero transcript.
pub const SESSION_KEY_HEX: &str =
    "de9c12e8acae159840a4c8064a06f58a2aaffda90f07be4d4f51505169af4e75";

/// The fixture's public parameters.
pub fn params() -> PublicParams {
    let dims = Dims::new(ROWS, COLS).expect("fixture shape");
    PublicParams::from_parts(
        PRIME,
        dims,
        BASE.concat(),
        &PUBLIC_X.concat(),
        &PUBLIC_Y.concat(),
    )
    .expect("fixture parameters are valid")
}

/// Alice's private key over `params` (which must be [`params()`]).
pub fn alice_key(params: &PublicParams) -> Result<PrivateKey> {
    PrivateKey::from_scalars(params, ALICE_SCALARS.0, ALICE_SCALARS.1)
}

/// Bob's private key over `params`.
pub fn bob_key(params: &PublicParams) -> Result<PrivateKey> {
    PrivateKey::from_scalars(params, BOB_SCALARS.0, BOB_SCALARS.1)
}

/// Lifts a constant cell grid to a matrix under the fixture modulus.
pub fn lift(params: &PublicParams, cells: &[[u64; COLS]; ROWS]) -> BaseMatrix {
    BaseMatrix::from_entries(params.dims(), params.modulus(), cells.concat())
        .expect("fixture cells are in range")
}
