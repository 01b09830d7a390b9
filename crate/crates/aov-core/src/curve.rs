//! Short-Weierstrass elliptic-curve arithmetic over prime fields.
//!
//! Two parameter sets are bundled: secp256k1, matching common blockchain
//! wallets, and a tiny prime-order curve over a 14-bit field so derivation
//! schemes can be tested exhaustively. Scalar multiplication runs on Jacobian
//! coordinates internally; the public surface is affine.
//!
//! Not constant-time. Fine for desk-scale experiments, not for handling
//! valuable keys.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Affine doublings `2^i * BP`, shared across all uses of a curve.
type BaseTable = Arc<Vec<(BigUint, BigUint)>>;

static BASE_TABLES: OnceLock<Mutex<HashMap<Vec<u8>, BaseTable>>> = OnceLock::new();

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CurveError {
    #[error("the point at infinity has no encoding")]
    IdentityPoint,
    #[error("point is not on the curve")]
    NotOnCurve,
}

/// Affine point, with an explicit identity element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Point {
    Identity,
    Affine { x: BigUint, y: BigUint },
}

impl Point {
    pub fn affine(x: BigUint, y: BigUint) -> Self {
        Point::Affine { x, y }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Point::Identity)
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Point::Identity => s.serialize_str("identity"),
            Point::Affine { x, y } => {
                let mut st = s.serialize_struct("Point", 2)?;
                st.serialize_field("x", &x.to_str_radix(10))?;
                st.serialize_field("y", &y.to_str_radix(10))?;
                st.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Tag(String),
            Coords { x: String, y: String },
        }
        match Repr::deserialize(d)? {
            Repr::Tag(t) if t == "identity" => Ok(Point::Identity),
            Repr::Tag(t) => Err(D::Error::custom(format!("unknown point tag {t:?}"))),
            Repr::Coords { x, y } => {
                let parse = |s: &String| {
                    BigUint::parse_bytes(s.as_bytes(), 10)
                        .ok_or_else(|| D::Error::custom("point coordinate is not decimal"))
                };
                Ok(Point::Affine { x: parse(&x)?, y: parse(&y)? })
            }
        }
    }
}

/// Well-known curve choices for configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveId {
    #[default]
    Secp256k1,
    Toy,
}

/// `y^2 = x^3 + ax + b` over `F_p`, with a base point of prime order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveParams {
    pub p: BigUint,
    pub a: BigUint,
    pub b: BigUint,
    pub base_point: Point,
    /// Group order `q` of the base point; prime.
    pub order: BigUint,
}

fn hex(s: &str) -> BigUint {
    BigUint::parse_bytes(s.as_bytes(), 16).unwrap()
}

impl CurveParams {
    pub fn from_id(id: CurveId) -> Self {
        match id {
            CurveId::Secp256k1 => Self::secp256k1(),
            CurveId::Toy => Self::toy(),
        }
    }

    pub fn secp256k1() -> Self {
        CurveParams {
            p: hex("FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F"),
            a: BigUint::zero(),
            b: BigUint::from(7u32),
            base_point: Point::affine(
                hex("79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798"),
                hex("483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8"),
            ),
            order: hex("FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141"),
        }
    }

    /// Prime-order curve over F_9973 (a = 2, b = 9, 10067 points), small
    /// enough to enumerate the whole group in tests.
    pub fn toy() -> Self {
        CurveParams {
            p: BigUint::from(9973u32),
            a: BigUint::from(2u32),
            b: BigUint::from(9u32),
            base_point: Point::affine(BigUint::zero(), BigUint::from(3u32)),
            order: BigUint::from(10067u32),
        }
    }

    /// Field element byte width, used for fixed-width point encodings.
    pub fn field_len(&self) -> usize {
        ((self.p.bits() + 7) / 8) as usize
    }

    pub fn is_on_curve(&self, point: &Point) -> bool {
        match point {
            Point::Identity => true,
            Point::Affine { x, y } => {
                if x >= &self.p || y >= &self.p {
                    return false;
                }
                let lhs = y * y % &self.p;
                let rhs = (x * x * x + &self.a * x + &self.b) % &self.p;
                lhs == rhs
            }
        }
    }

    fn sub_p(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            a + &self.p - b
        }
    }

    fn redc(&self, x: BigUint) -> BigUint {
        x % &self.p
    }

    fn inv_p(&self, a: &BigUint) -> BigUint {
        a.modinv(&self.p).expect("nonzero field element")
    }

    pub fn neg(&self, point: &Point) -> Point {
        match point {
            Point::Identity => Point::Identity,
            Point::Affine { x, y } => {
                if y.is_zero() {
                    Point::affine(x.clone(), y.clone())
                } else {
                    Point::affine(x.clone(), &self.p - y)
                }
            }
        }
    }

    pub fn add(&self, lhs: &Point, rhs: &Point) -> Point {
        let j = jac_add(self, &to_jac(lhs), &to_jac(rhs));
        self.to_affine(&j)
    }

    pub fn double(&self, point: &Point) -> Point {
        let j = jac_double(self, &to_jac(point));
        self.to_affine(&j)
    }

    /// `k * point` by double-and-add on Jacobian coordinates. The scalar is
    /// reduced modulo the group order first. Base-point multiplications take
    /// a fixed-base path over a cached table of doublings.
    pub fn mul(&self, scalar: &BigUint, point: &Point) -> Point {
        let k = scalar % &self.order;
        if k.is_zero() || point.is_identity() {
            return Point::Identity;
        }
        if *point == self.base_point {
            return self.mul_base(&k, &self.base_table());
        }
        if let Some(table) = self.cached_table(point) {
            return self.mul_base(&k, &table);
        }
        let base = to_jac(point);
        let mut acc = Jacobian::identity();
        for i in (0..k.bits()).rev() {
            acc = jac_double(self, &acc);
            if k.bit(i) {
                acc = jac_add(self, &acc, &base);
            }
        }
        self.to_affine(&acc)
    }

    /// Fixed-base multiplication: sum the precomputed `2^i * P` for the set
    /// bits of the (already reduced, nonzero) scalar.
    fn mul_base(&self, k: &BigUint, table: &BaseTable) -> Point {
        let mut acc = Jacobian::identity();
        for i in 0..k.bits() {
            if k.bit(i) {
                let (x, y) = &table[i as usize];
                let addend = Jacobian { x: x.clone(), y: y.clone(), z: BigUint::one() };
                acc = jac_add(self, &acc, &addend);
            }
        }
        self.to_affine(&acc)
    }

    fn table_key(&self, point: &Point) -> Vec<u8> {
        let mut key = self.p.to_bytes_be();
        key.extend(self.compress(point).expect("only affine points are tabled"));
        key
    }

    fn cached_table(&self, point: &Point) -> Option<BaseTable> {
        let tables = BASE_TABLES.get_or_init(|| Mutex::new(HashMap::new()));
        tables.lock().unwrap().get(&self.table_key(point)).cloned()
    }

    /// Precomputes and caches the doubling table for a point expected to be
    /// multiplied many times (the authority key, say). Points of the base
    /// point's prime order only.
    pub fn cache_point(&self, point: &Point) {
        if point.is_identity() {
            return;
        }
        let key = self.table_key(point);
        let tables = BASE_TABLES.get_or_init(|| Mutex::new(HashMap::new()));
        if tables.lock().unwrap().contains_key(&key) {
            return;
        }
        // built outside the lock: doubling never reaches the identity before
        // the (prime) order does
        let mut table = Vec::with_capacity(self.order.bits() as usize);
        let mut current = point.clone();
        for _ in 0..self.order.bits() {
            match &current {
                Point::Affine { x, y } => table.push((x.clone(), y.clone())),
                Point::Identity => unreachable!("tabled points have prime order"),
            }
            current = self.double(&current);
        }
        tables.lock().unwrap().entry(key).or_insert_with(|| Arc::new(table));
    }

    fn base_table(&self) -> BaseTable {
        if let Some(table) = self.cached_table(&self.base_point) {
            return table;
        }
        self.cache_point(&self.base_point.clone());
        self.cached_table(&self.base_point).expect("just cached")
    }

    /// SEC1-style compressed encoding: parity prefix then the x coordinate at
    /// field width. The identity has no encoding.
    pub fn compress(&self, point: &Point) -> Result<Vec<u8>, CurveError> {
        match point {
            Point::Identity => Err(CurveError::IdentityPoint),
            Point::Affine { x, y } => {
                let mut out = vec![if y.bit(0) { 3u8 } else { 2u8 }];
                let xb = x.to_bytes_be();
                out.extend(std::iter::repeat(0u8).take(self.field_len() - xb.len()));
                out.extend_from_slice(&xb);
                Ok(out)
            }
        }
    }

    fn to_affine(&self, j: &Jacobian) -> Point {
        if j.z.is_zero() {
            return Point::Identity;
        }
        let zinv = self.inv_p(&j.z);
        let zinv2 = &zinv * &zinv % &self.p;
        let zinv3 = &zinv2 * &zinv % &self.p;
        Point::affine(&j.x * zinv2 % &self.p, &j.y * zinv3 % &self.p)
    }
}

/// Jacobian coordinates: (X, Y, Z) with x = X/Z^2, y = Y/Z^3.
struct Jacobian {
    x: BigUint,
    y: BigUint,
    z: BigUint,
}

impl Jacobian {
    fn identity() -> Self {
        Jacobian { x: BigUint::one(), y: BigUint::one(), z: BigUint::zero() }
    }
}

fn to_jac(p: &Point) -> Jacobian {
    match p {
        Point::Identity => Jacobian::identity(),
        Point::Affine { x, y } => Jacobian { x: x.clone(), y: y.clone(), z: BigUint::one() },
    }
}

fn jac_double(c: &CurveParams, p: &Jacobian) -> Jacobian {
    if p.z.is_zero() || p.y.is_zero() {
        return Jacobian::identity();
    }
    let y2 = c.redc(&p.y * &p.y);
    let s = c.redc(c.redc(BigUint::from(4u32) * &p.x) * &y2);
    let z2 = c.redc(&p.z * &p.z);
    let z4 = c.redc(&z2 * &z2);
    let big_m = c.redc(c.redc(BigUint::from(3u32) * &p.x) * &p.x + &c.a * z4);
    let x3 = c.sub_p(&c.redc(&big_m * &big_m), &c.redc(BigUint::from(2u32) * &s));
    let y4 = c.redc(&y2 * &y2);
    let y3 = c.sub_p(
        &c.redc(&big_m * c.sub_p(&s, &x3)),
        &c.redc(BigUint::from(8u32) * y4),
    );
    let z3 = c.redc(c.redc(BigUint::from(2u32) * &p.y) * &p.z);
    Jacobian { x: x3, y: y3, z: z3 }
}

fn jac_add(c: &CurveParams, p: &Jacobian, q: &Jacobian) -> Jacobian {
    if p.z.is_zero() {
        return Jacobian { x: q.x.clone(), y: q.y.clone(), z: q.z.clone() };
    }
    if q.z.is_zero() {
        return Jacobian { x: p.x.clone(), y: p.y.clone(), z: p.z.clone() };
    }
    let z1z1 = c.redc(&p.z * &p.z);
    let q_affine = q.z.is_one();
    let (u1, s1) = if q_affine {
        // mixed addition: the addend has z = 1
        (p.x.clone(), p.y.clone())
    } else {
        let z2z2 = c.redc(&q.z * &q.z);
        let u1 = c.redc(&p.x * &z2z2);
        let s1 = c.redc(c.redc(&p.y * &z2z2) * &q.z);
        (u1, s1)
    };
    let u2 = c.redc(&q.x * &z1z1);
    let s2 = c.redc(c.redc(&q.y * &z1z1) * &p.z);
    if u1 == u2 {
        if s1 != s2 {
            return Jacobian::identity();
        }
        return jac_double(c, p);
    }
    let h = c.sub_p(&u2, &u1);
    let r = c.sub_p(&s2, &s1);
    let h2 = c.redc(&h * &h);
    let h3 = c.redc(&h2 * &h);
    let u1h2 = c.redc(&u1 * &h2);
    let x3 = c.sub_p(
        &c.sub_p(&c.redc(&r * &r), &h3),
        &c.redc(BigUint::from(2u32) * &u1h2),
    );
    let y3 = c.sub_p(&c.redc(&r * c.sub_p(&u1h2, &x3)), &c.redc(&s1 * &h3));
    let z3 = if q_affine {
        c.redc(&h * &p.z)
    } else {
        c.redc(c.redc(&h * &p.z) * &q.z)
    };
    Jacobian { x: x3, y: y3, z: z3 }
}
