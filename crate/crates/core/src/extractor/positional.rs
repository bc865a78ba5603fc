pub const POSITIONAL_DIM: usize = 10;

/// `center ⊕ neighbor ⊕ (center - neighbor) ⊕ |center - neighbor|`.
#[inline]
pub fn positional_encode(center: &[f64; 3], neighbor: &[f64; 3]) -> [f64; POSITIONAL_DIM] {
    let d = [
        center[0] - neighbor[0],
        center[1] - neighbor[1],
        center[2] - neighbor[2],
    ];
    let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    [
        center[0], center[1], center[2], neighbor[0], neighbor[1], neighbor[2], d[0], d[1], d[2],
        dist,
    ]
}
