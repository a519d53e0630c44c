//! Small fixed-size vector helpers and tetrahedron measures.

pub type Vec3 = [f64; 3];

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    libm::sqrt(dot(a, a))
}

#[inline]
pub fn dist(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn lerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

#[inline]
pub fn midpoint(a: Vec3, b: Vec3) -> Vec3 {
    [
        0.5 * (a[0] + b[0]),
        0.5 * (a[1] + b[1]),
        0.5 * (a[2] + b[2]),
    ]
}

pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    if n > 0.0 {
        scale(a, 1.0 / n)
    } else {
        a
    }
}

/// Signed volume; positive when (b-a, c-a, d-a) is right-handed.
#[inline]
pub fn tet_volume(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    dot(sub(b, a), cross(sub(c, a), sub(d, a))) / 6.0
}

pub fn centroid4(p: [Vec3; 4]) -> Vec3 {
    [
        0.25 * (p[0][0] + p[1][0] + p[2][0] + p[3][0]),
        0.25 * (p[0][1] + p[1][1] + p[2][1] + p[3][1]),
        0.25 * (p[0][2] + p[1][2] + p[2][2] + p[3][2]),
    ]
}

/// Area-weighted normal (length = 2 * area) of triangle a, b, c.
#[inline]
pub fn tri_normal(a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    cross(sub(b, a), sub(c, a))
}

pub fn tri_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * norm(tri_normal(a, b, c))
}

/// The six interior dihedral angles of a tetrahedron, in degrees. A degenerate
/// tetrahedron reports 0.
pub fn dihedral_angles(p: [Vec3; 4]) -> [f64; 6] {
    // edge (i, j) is opposite to edge (k, l); the dihedral at edge (i, j) is
    // the angle between faces (i, j, k) and (i, j, l).
    const EDGES: [(usize, usize, usize, usize); 6] = [
        (0, 1, 2, 3),
        (0, 2, 1, 3),
        (0, 3, 1, 2),
        (1, 2, 0, 3),
        (1, 3, 0, 2),
        (2, 3, 0, 1),
    ];
    let mut out = [0.0; 6];
    for (slot, &(i, j, k, l)) in EDGES.iter().enumerate() {
        let e = sub(p[j], p[i]);
        let el = norm(e);
        if el == 0.0 {
            continue;
        }
        let e = scale(e, 1.0 / el);
        // components of (k - i) and (l - i) orthogonal to the edge
        let u = sub(p[k], p[i]);
        let v = sub(p[l], p[i]);
        let u = sub(u, scale(e, dot(u, e)));
        let v = sub(v, scale(e, dot(v, e)));
        let (nu, nv) = (norm(u), norm(v));
        if nu == 0.0 || nv == 0.0 {
            continue;
        }
        let c = (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0);
        out[slot] = libm::acos(c).to_degrees();
    }
    out
}

pub fn min_dihedral(p: [Vec3; 4]) -> f64 {
    dihedral_angles(p)
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Volume-to-edge-length quality, 1 for the regular tetrahedron and <= 0 for
/// inverted ones.
pub fn mean_ratio(p: [Vec3; 4]) -> f64 {
    let v = tet_volume(p[0], p[1], p[2], p[3]);
    let mut l2 = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let d = sub(p[i], p[j]);
            l2 += dot(d, d);
        }
    }
    if l2 == 0.0 {
        return 0.0;
    }
    // regular tet: V = a^3 / (6 sqrt 2), sum l^2 = 6 a^2
    let rms = libm::sqrt(l2 / 6.0);
    v * 6.0 * core::f64::consts::SQRT_2 / (rms * rms * rms)
}

/// Closest distance from `p` to triangle `a, b, c`.
pub fn point_triangle_distance(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    // Ericson, Real-Time Collision Detection, 5.1.5
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(ab, ap);
    let d2 = dot(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return norm(ap);
    }
    let bp = sub(p, b);
    let d3 = dot(ab, bp);
    let d4 = dot(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return norm(bp);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return dist(p, add(a, scale(ab, v)));
    }
    let cp = sub(p, c);
    let d5 = dot(ab, cp);
    let d6 = dot(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return norm(cp);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return dist(p, add(a, scale(ac, w)));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return dist(p, add(b, scale(sub(c, b), w)));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    dist(p, add(a, add(scale(ab, v), scale(ac, w))))
}

/// Barycentric coordinates of `p` in tetrahedron `t`.
pub fn barycentric(p: Vec3, t: [Vec3; 4]) -> [f64; 4] {
    let v = tet_volume(t[0], t[1], t[2], t[3]);
    if v == 0.0 {
        return [f64::NAN; 4];
    }
    let b0 = tet_volume(p, t[1], t[2], t[3]) / v;
    let b1 = tet_volume(t[0], p, t[2], t[3]) / v;
    let b2 = tet_volume(t[0], t[1], p, t[3]) / v;
    [b0, b1, b2, 1.0 - b0 - b1 - b2]
}
