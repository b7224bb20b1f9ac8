#pragma once

#include <cmath>

namespace graphflow {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3 operator*(Vec3 a, double s) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3& operator+=(Vec3& a, Vec3 b) { a.x += b.x; a.y += b.y; a.z += b.z; return a; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) {
  double n = norm(a);
  return n > 0.0 ? (1.0 / n) * a : a;
}
inline Vec2 xy(Vec3 a) { return {a.x, a.y}; }
inline Vec3 lift3(Vec2 a) { return {a.x, a.y, 0.0}; }

// General 2x2 matrix, row major: m[row][col].
struct Mat2 {
  double m[2][2] = {{0.0, 0.0}, {0.0, 0.0}};

  static Mat2 identity() { return {{{1.0, 0.0}, {0.0, 1.0}}}; }
  static Mat2 from_rows(Vec2 r0, Vec2 r1) { return {{{r0.x, r0.y}, {r1.x, r1.y}}}; }
  static Mat2 from_cols(Vec2 c0, Vec2 c1) { return {{{c0.x, c1.x}, {c0.y, c1.y}}}; }

  Vec2 row(int i) const { return {m[i][0], m[i][1]}; }
  Vec2 col(int j) const { return {m[0][j], m[1][j]}; }
  double det() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }
};

inline Mat2 operator*(const Mat2& a, const Mat2& b) {
  Mat2 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      r.m[i][j] = a.m[i][0] * b.m[0][j] + a.m[i][1] * b.m[1][j];
  return r;
}
inline Vec2 operator*(const Mat2& a, Vec2 v) {
  return {a.m[0][0] * v.x + a.m[0][1] * v.y, a.m[1][0] * v.x + a.m[1][1] * v.y};
}
inline Mat2 operator*(double s, const Mat2& a) {
  return {{{s * a.m[0][0], s * a.m[0][1]}, {s * a.m[1][0], s * a.m[1][1]}}};
}
inline Mat2 operator-(const Mat2& a, const Mat2& b) {
  return {{{a.m[0][0] - b.m[0][0], a.m[0][1] - b.m[0][1]},
           {a.m[1][0] - b.m[1][0], a.m[1][1] - b.m[1][1]}}};
}
inline Mat2 transpose(const Mat2& a) {
  return {{{a.m[0][0], a.m[1][0]}, {a.m[0][1], a.m[1][1]}}};
}
inline Mat2 inverse(const Mat2& a) {
  double d = a.det();
  return {{{a.m[1][1] / d, -a.m[0][1] / d}, {-a.m[1][0] / d, a.m[0][0] / d}}};
}
inline double frob_norm(const Mat2& a) {
  return std::sqrt(a.m[0][0] * a.m[0][0] + a.m[0][1] * a.m[0][1] +
                   a.m[1][0] * a.m[1][0] + a.m[1][1] * a.m[1][1]);
}

// Symmetric 2x2 tensor (metrics, pullbacks, second-fundamental-form slices).
struct Sym2 {
  double a11 = 0.0, a12 = 0.0, a22 = 0.0;

  static Sym2 identity() { return {1.0, 0.0, 1.0}; }
  static Sym2 diag(double d1, double d2) { return {d1, 0.0, d2}; }

  double det() const { return a11 * a22 - a12 * a12; }
  double trace() const { return a11 + a22; }
  double operator()(int i, int j) const {
    if (i == 0 && j == 0) return a11;
    if (i == 1 && j == 1) return a22;
    return a12;
  }
};

inline Sym2 operator+(Sym2 a, Sym2 b) { return {a.a11 + b.a11, a.a12 + b.a12, a.a22 + b.a22}; }
inline Sym2 operator-(Sym2 a, Sym2 b) { return {a.a11 - b.a11, a.a12 - b.a12, a.a22 - b.a22}; }
inline Sym2 operator*(double s, Sym2 a) { return {s * a.a11, s * a.a12, s * a.a22}; }
inline Sym2 sym_inverse(Sym2 a) {
  double d = a.det();
  return {a.a22 / d, -a.a12 / d, a.a11 / d};
}
inline Vec2 operator*(Sym2 a, Vec2 v) {
  return {a.a11 * v.x + a.a12 * v.y, a.a12 * v.x + a.a22 * v.y};
}
// v^T a w
inline double quad(Sym2 a, Vec2 v, Vec2 w) { return dot(v, a * w); }
// df^T gN df  (congruence pullback of a target metric through a 2x2 differential)
inline Sym2 pullback(const Mat2& df, Sym2 gN) {
  Vec2 c0 = df.col(0), c1 = df.col(1);
  return {quad(gN, c0, c0), quad(gN, c0, c1), quad(gN, c1, c1)};
}
inline double max_abs_entry(Sym2 a) {
  return std::max(std::abs(a.a11), std::max(std::abs(a.a12), std::abs(a.a22)));
}

inline double det3(const double m[3][3]) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

}  // namespace graphflow
