// Seeded 3-D value noise: pseudo-random lattice values blended with a
// smoothstep kernel. Pure function of (seed, x, y, z).

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn lattice(seed: u64, x: i64, y: i64, z: i64) -> f64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ x as u64);
    h = splitmix64(h ^ y as u64);
    h = splitmix64(h ^ z as u64);
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Value noise in `[0, 1)`, continuous in every coordinate.
pub fn value_noise(seed: u64, x: f64, y: f64, z: f64) -> f64 {
    let (x0, y0, z0) = (x.floor(), y.floor(), z.floor());
    let (tx, ty, tz) = (smooth(x - x0), smooth(y - y0), smooth(z - z0));
    let (ix, iy, iz) = (x0 as i64, y0 as i64, z0 as i64);
    let corner = |dx: i64, dy: i64, dz: i64| lattice(seed, ix + dx, iy + dy, iz + dz);
    let plane = |dz: i64| {
        lerp(
            lerp(corner(0, 0, dz), corner(1, 0, dz), tx),
            lerp(corner(0, 1, dz), corner(1, 1, dz), tx),
            ty,
        )
    };
    lerp(plane(0), plane(1), tz)
}

pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    splitmix64(seed ^ splitmix64(salt))
}
