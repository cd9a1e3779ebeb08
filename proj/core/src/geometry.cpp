#include "regcd/geometry.hpp"

#include <cmath>
#include <numbers>

#include "regcd/errors.hpp"

namespace regcd {

namespace {

constexpr double kSingularTol = 1e-12;
constexpr double kBoundaryTol = 1e-9;

double det3(const std::array<double, 9>& m) {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

} // namespace

Homography::Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

Homography::Homography(const std::array<double, 9>& row_major) : m_(row_major) {
    for (double v : m_)
        if (!std::isfinite(v)) throw GeometryError("homography entry is not finite");
    double w = m_[8];
    if (std::abs(w) > kSingularTol) {
        for (double& v : m_) v /= w;
    } else {
        double norm2 = 0.0;
        for (double v : m_) norm2 += v * v;
        double norm = std::sqrt(norm2);
        if (norm <= kSingularTol) throw GeometryError("homography matrix is zero");
        for (double& v : m_) v /= norm;
    }
    if (std::abs(det3(m_)) <= kSingularTol)
        throw GeometryError("homography matrix is singular");
}

Homography Homography::translation(double tx, double ty) {
    return Homography({1, 0, tx, 0, 1, ty, 0, 0, 1});
}

Homography Homography::scaling(double sx, double sy) {
    return Homography({sx, 0, 0, 0, sy, 0, 0, 0, 1});
}

Homography Homography::rotation_deg(double degrees, double cx, double cy) {
    const double rad = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);
    // Conjugate the rotation with the translation that moves (cx, cy) to the
    // origin, composed into a single matrix.
    return Homography({c, -s, cx - c * cx + s * cy,
                       s, c, cy - s * cx - c * cy,
                       0, 0, 1});
}

double Homography::det() const { return det3(m_); }

Homography Homography::inverse() const {
    const auto& m = m_;
    const double d = det3(m);
    // Construction guarantees |d| > tolerance; adjugate over determinant.
    std::array<double, 9> inv = {
        (m[4] * m[8] - m[5] * m[7]) / d, (m[2] * m[7] - m[1] * m[8]) / d,
        (m[1] * m[5] - m[2] * m[4]) / d, (m[5] * m[6] - m[3] * m[8]) / d,
        (m[0] * m[8] - m[2] * m[6]) / d, (m[2] * m[3] - m[0] * m[5]) / d,
        (m[3] * m[7] - m[4] * m[6]) / d, (m[1] * m[6] - m[0] * m[7]) / d,
        (m[0] * m[4] - m[1] * m[3]) / d,
    };
    return Homography(inv);
}

Homography operator*(const Homography& a, const Homography& b) {
    std::array<double, 9> out{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            for (int k = 0; k < 3; ++k)
                out[r * 3 + c] += a.at(r, k) * b.at(k, c);
    return Homography(out);
}

Point apply_h(const Homography& h, Point p) {
    const auto& m = h.data();
    const double u = m[0] * p.x + m[1] * p.y + m[2];
    const double v = m[3] * p.x + m[4] * p.y + m[5];
    const double w = m[6] * p.x + m[7] * p.y + m[8];
    if (std::abs(w) <= kSingularTol)
        throw GeometryError("point maps to the line at infinity");
    return {u / w, v / w};
}

double Polygon::area() const {
    if (vertices.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Point& a = vertices[i];
        const Point& b = vertices[(i + 1) % vertices.size()];
        twice += a.x * b.y - b.x * a.y;
    }
    return 0.5 * twice;
}

bool Polygon::contains(Point p) const {
    if (vertices.size() < 3) return false;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Point& a = vertices[i];
        const Point& b = vertices[(i + 1) % vertices.size()];
        const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if (cross < -kBoundaryTol) return false; // strictly right of a CCW edge
    }
    return true;
}

Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
    if (subject.empty() || clip.empty()) return {};
    std::vector<Point> output = subject.vertices;
    for (std::size_t i = 0; i < clip.vertices.size() && !output.empty(); ++i) {
        const Point ca = clip.vertices[i];
        const Point cb = clip.vertices[(i + 1) % clip.vertices.size()];
        auto side = [&](Point p) {
            return (cb.x - ca.x) * (p.y - ca.y) - (cb.y - ca.y) * (p.x - ca.x);
        };
        std::vector<Point> input;
        input.swap(output);
        for (std::size_t j = 0; j < input.size(); ++j) {
            const Point cur = input[j];
            const Point nxt = input[(j + 1) % input.size()];
            const double sc = side(cur), sn = side(nxt);
            if (sc >= -kBoundaryTol) output.push_back(cur);
            // Edge crosses the clip line strictly: emit the intersection.
            if ((sc >= -kBoundaryTol) != (sn >= -kBoundaryTol)) {
                const double t = sc / (sc - sn);
                output.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
            }
        }
    }
    // Collapse near-duplicate vertices produced by clipping through corners.
    std::vector<Point> dedup;
    for (const Point& p : output) {
        if (!dedup.empty()) {
            const Point& last = dedup.back();
            if (std::abs(last.x - p.x) <= kBoundaryTol && std::abs(last.y - p.y) <= kBoundaryTol)
                continue;
        }
        dedup.push_back(p);
    }
    if (dedup.size() >= 2) {
        const Point& first = dedup.front();
        const Point& last = dedup.back();
        if (std::abs(first.x - last.x) <= kBoundaryTol && std::abs(first.y - last.y) <= kBoundaryTol)
            dedup.pop_back();
    }
    if (dedup.size() < 3) return {};
    Polygon result{std::move(dedup)};
    if (result.area() <= 0.0) return {};
    return result;
}

Polygon rect_polygon(double w, double h) {
    return Polygon{{{0, 0}, {w, 0}, {w, h}, {0, h}}};
}

} // namespace regcd
