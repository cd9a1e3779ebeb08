#pragma once

#include <array>
#include <vector>

namespace regcd {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// 3x3 projective transform acting on homogeneous pixel coordinates.
///
/// Stored row-major and normalized on construction: divided by m[2][2] when
/// |m[2][2]| > 1e-12, otherwise by the Frobenius norm. Construction throws
/// GeometryError if the matrix is singular (|det| <= 1e-12 after
/// normalization) or contains non-finite entries.
class Homography {
public:
    /// Identity transform.
    Homography();

    /// Normalizing constructor from a row-major 3x3 matrix.
    explicit Homography(const std::array<double, 9>& row_major);

    static Homography identity() { return Homography(); }
    static Homography translation(double tx, double ty);
    static Homography scaling(double sx, double sy);
    /// Rotation by `degrees` (counter-clockwise in image axes) about (cx, cy).
    static Homography rotation_deg(double degrees, double cx, double cy);

    double at(int row, int col) const { return m_[row * 3 + col]; }
    const std::array<double, 9>& data() const { return m_; }

    double det() const;
    Homography inverse() const;

    /// Composition: (a * b)(p) == a(b(p)).
    friend Homography operator*(const Homography& a, const Homography& b);

private:
    std::array<double, 9> m_;
};

/// Apply h to a point. Throws GeometryError when the point maps to the line
/// at infinity (|w| <= 1e-12).
Point apply_h(const Homography& h, Point p);

/// Convex polygon, counter-clockwise vertex order. Empty is allowed;
/// non-empty polygons have at least 3 vertices.
struct Polygon {
    std::vector<Point> vertices;

    bool empty() const { return vertices.empty(); }
    /// Shoelace area; >= 0 for counter-clockwise order.
    double area() const;
    /// True if p is inside or on the boundary (tolerance 1e-9).
    bool contains(Point p) const;
};

/// Intersection of two convex polygons (Sutherland-Hodgman clipping of
/// `subject` against `clip`). Result is counter-clockwise; may be empty.
Polygon clip_convex(const Polygon& subject, const Polygon& clip);

/// Axis-aligned rectangle [0,w] x [0,h] as a counter-clockwise polygon.
Polygon rect_polygon(double w, double h);

} // namespace regcd
