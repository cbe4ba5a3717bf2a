#include "bikevhc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "bikevhc/csv.hpp"
#include "bikevhc/errors.hpp"
#include "bikevhc/odeint.hpp"
#include "bikevhc/quadrature.hpp"

namespace bikevhc {

namespace {

constexpr int kScanGrid = 4096;  // convexity / extrema scans

double curvature_from(const CurveEval& e) {
    const double v = norm(e.d1);
    return cross(e.d1, e.d2) / (v * v * v);
}

}  // namespace

Curve Curve::ellipse(double semi_major, double semi_minor) {
    if (!(semi_major > 0.0 && semi_minor > 0.0))
        throw ParseError("Curve::ellipse: semiaxes must be positive");
    Curve c;
    c.kind_ = Kind::ellipse;
    c.A_ = semi_major;
    c.B_ = semi_minor;
    c.period_ = 2.0 * M_PI;
    return c;
}

Curve Curve::circle(double radius) {
    if (!(radius > 0.0)) throw ParseError("Curve::circle: radius must be positive");
    Curve c;
    c.kind_ = Kind::circle;
    c.R_ = radius;
    c.period_ = 2.0 * M_PI;
    return c;
}

Curve Curve::polar_flower(double c0, double c1, int lobes) {
    if (!(c0 > std::abs(c1)))
        throw ParseError("Curve::polar_flower: need c0 > |c1| for a positive radius");
    if (lobes < 1) throw ParseError("Curve::polar_flower: lobes must be >= 1");
    Curve c;
    c.kind_ = Kind::polar_flower;
    c.c0_ = c0;
    c.c1_ = c1;
    c.lobes_ = lobes;
    c.period_ = 2.0 * M_PI;
    return c;
}

Curve Curve::from_samples(std::vector<double> s_nodes, const std::vector<CurveEval>& samples,
                          double period) {
    const std::size_t n = s_nodes.size();
    if (n < 8) throw ParseError("Curve::from_samples: need at least 8 nodes");
    if (samples.size() != n) throw ParseError("Curve::from_samples: nodes/samples size mismatch");

    auto col = [&](auto pick) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = pick(samples[i]);
        return v;
    };
    std::vector<double> kap(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (norm(samples[i].d1) < speed_tolerance)
            throw RegularityError("Curve::from_samples: vanishing speed at node " +
                                  std::to_string(i));
        kap[i] = curvature_from(samples[i]);
    }

    auto data = std::make_shared<SampledData>();
    data->s = s_nodes;
    data->x = PeriodicCubicSpline(s_nodes, col([](const CurveEval& e) { return e.sigma.x; }), period);
    data->y = PeriodicCubicSpline(s_nodes, col([](const CurveEval& e) { return e.sigma.y; }), period);
    data->dx = PeriodicCubicSpline(s_nodes, col([](const CurveEval& e) { return e.d1.x; }), period);
    data->dy = PeriodicCubicSpline(s_nodes, col([](const CurveEval& e) { return e.d1.y; }), period);
    data->ddx = PeriodicCubicSpline(s_nodes, col([](const CurveEval& e) { return e.d2.x; }), period);
    data->ddy = PeriodicCubicSpline(s_nodes, col([](const CurveEval& e) { return e.d2.y; }), period);
    data->dddx = PeriodicCubicSpline(s_nodes, col([](const CurveEval& e) { return e.d3.x; }), period);
    data->dddy = PeriodicCubicSpline(s_nodes, col([](const CurveEval& e) { return e.d3.y; }), period);
    data->kappa = PeriodicCubicSpline(std::move(s_nodes), std::move(kap), period);

    Curve c;
    c.kind_ = Kind::sampled;
    c.period_ = period;
    c.tab_ = std::move(data);
    return c;
}

CurveEval Curve::eval_analytic(double s) const {
    CurveEval e;
    switch (kind_) {
        case Kind::ellipse: {
            const double cs = std::cos(s), sn = std::sin(s);
            e.sigma = {A_ * cs, B_ * sn};
            e.d1 = {-A_ * sn, B_ * cs};
            e.d2 = {-A_ * cs, -B_ * sn};
            e.d3 = {A_ * sn, -B_ * cs};
            break;
        }
        case Kind::circle: {
            const double cs = std::cos(s), sn = std::sin(s);
            e.sigma = {R_ * cs, R_ * sn};
            e.d1 = {-R_ * sn, R_ * cs};
            e.d2 = {-R_ * cs, -R_ * sn};
            e.d3 = {R_ * sn, -R_ * cs};
            break;
        }
        case Kind::polar_flower: {
            const double n = lobes_;
            const double cs = std::cos(s), sn = std::sin(s);
            const double r = c0_ + c1_ * std::cos(n * s);
            const double r1 = -c1_ * n * std::sin(n * s);
            const double r2 = -c1_ * n * n * std::cos(n * s);
            const double r3 = c1_ * n * n * n * std::sin(n * s);
            e.sigma = {r * cs, r * sn};
            e.d1 = {r1 * cs - r * sn, r1 * sn + r * cs};
            e.d2 = {r2 * cs - 2 * r1 * sn - r * cs, r2 * sn + 2 * r1 * cs - r * sn};
            e.d3 = {r3 * cs - 3 * r2 * sn - 3 * r1 * cs + r * sn,
                    r3 * sn + 3 * r2 * cs - 3 * r1 * sn - r * cs};
            break;
        }
        case Kind::sampled:
            break;  // handled by eval()
    }
    return e;
}

CurveEval Curve::eval(double s) const {
    CurveEval e;
    if (kind_ == Kind::sampled) {
        const auto& d = *tab_;
        e.sigma = {d.x.value(s), d.y.value(s)};
        e.d1 = {d.dx.value(s), d.dy.value(s)};
        e.d2 = {d.ddx.value(s), d.ddy.value(s)};
        e.d3 = {d.dddx.value(s), d.dddy.value(s)};
    } else {
        e = eval_analytic(s);
    }
    if (norm(e.d1) < speed_tolerance)
        throw RegularityError("Curve::eval: parametrization speed below tolerance at s=" +
                              std::to_string(s));
    return e;
}

Curvature Curve::curvature(double s) const {
    const CurveEval e = eval(s);
    const double v = norm(e.d1);
    Curvature k;
    k.speed = v;
    k.kappa = cross(e.d1, e.d2) / (v * v * v);
    if (kind_ == Kind::sampled) {
        k.kappa_prime = tab_->kappa.deriv(s);
    } else {
        // d/ds of (x'y'' - y'x'') / v^3; the x''y'' terms cancel in the numerator
        const double num = cross(e.d1, e.d2);
        const double num1 = cross(e.d1, e.d3);
        const double vdot = dot(e.d1, e.d2) / v;
        k.kappa_prime = num1 / (v * v * v) - 3.0 * num * vdot / (v * v * v * v);
    }
    return k;
}

Curve arclength_reparam(const Curve& curve, int n_nodes) {
    if (n_nodes < 64) throw ParseError("arclength_reparam: n_nodes must be at least 64");
    const double T = curve.period();

    const double L = adaptive_simpson([&](double t) { return norm(curve.eval(t).d1); }, 0.0, T);

    // March t(l) through dt/dl = 1/speed, stopping at every arc-length node so
    // each sample is an accepted endpoint at full integrator accuracy.
    odeint::IntegratorConfig cfg;
    cfg.rtol = 1e-12;
    cfg.atol = 1e-14;
    odeint::Rhs rhs = [&](double, const odeint::State& x, odeint::State& dxdt) {
        dxdt[0] = 1.0 / norm(curve.eval(x[0]).d1);
    };

    std::vector<double> nodes(n_nodes);
    std::vector<CurveEval> samples(n_nodes);
    odeint::State state = {0.0};
    for (int i = 0; i < n_nodes; ++i) {
        const double li = L * i / n_nodes;
        if (i > 0) {
            const double l_prev = L * (i - 1) / n_nodes;
            auto res = odeint::integrate(rhs, l_prev, state, li, cfg);
            if (!res.ok()) throw RegularityError("arclength_reparam: " + res.message);
            state = res.end_state();
        }
        const double t = state[0];
        const CurveEval e = curve.eval(t);

        const double v = norm(e.d1);
        const double vdot = dot(e.d1, e.d2) / v;
        const double vddot = (dot(e.d2, e.d2) + dot(e.d1, e.d3) - vdot * vdot) / v;
        const double t1 = 1.0 / v;
        const double t2 = -vdot / (v * v * v);
        const double t3 = -vddot / (v * v * v * v) + 3.0 * vdot * vdot / (v * v * v * v * v);

        CurveEval out;
        out.sigma = e.sigma;
        out.d1 = t1 * e.d1;
        out.d2 = (t1 * t1) * e.d2 + t2 * e.d1;
        out.d3 = (t1 * t1 * t1) * e.d3 + (3.0 * t1 * t2) * e.d2 + t3 * e.d1;
        nodes[i] = li;
        samples[i] = out;
    }
    return Curve::from_samples(std::move(nodes), samples, L);
}

CurveMetrics check_curvature_bound(const Curve& curve, const BicycleParams& params) {
    params.validate();
    const double T = curve.period();

    CurveMetrics m;
    m.length = adaptive_simpson([&](double t) { return norm(curve.eval(t).d1); }, 0.0, T);
    const double total_turn =
        adaptive_simpson([&](double t) { const Curvature c = curve.curvature(t);
                                         return c.kappa * c.speed; }, 0.0, T);
    m.turning_number = static_cast<int>(std::lround(total_turn / (2.0 * M_PI)));
    m.mean_curvature_lhs = total_turn / m.length;
    m.bound_rhs = params.h / (params.b * params.b + params.h * params.h);

    m.convex = true;
    for (int i = 0; i < kScanGrid; ++i) {
        if (curve.curvature(T * i / kScanGrid).kappa <= 0.0) {
            m.convex = false;
            break;
        }
    }
    return m;
}

void Curve::write_csv(std::ostream& os) const {
    if (kind_ != Kind::sampled)
        throw ParseError("Curve::write_csv: only sampled curves are serializable");
    const auto& d = *tab_;
    os << "# T=" << csv::num(period_) << "\n";
    os << "s,x,y,dx,dy,ddx,ddy,dddx,dddy\n";
    for (std::size_t i = 0; i < d.s.size(); ++i) {
        const double s = d.s[i];
        os << csv::num(s) << ',' << csv::num(d.x.values()[i]) << ',' << csv::num(d.y.values()[i])
           << ',' << csv::num(d.dx.values()[i]) << ',' << csv::num(d.dy.values()[i]) << ','
           << csv::num(d.ddx.values()[i]) << ',' << csv::num(d.ddy.values()[i]) << ','
           << csv::num(d.dddx.values()[i]) << ',' << csv::num(d.dddy.values()[i]) << "\n";
    }
}

Curve Curve::read_csv(std::istream& is) {
    csv::Table table = csv::read(is, {"s", "x", "y", "dx", "dy", "ddx", "ddy", "dddx", "dddy"});
    const std::size_t n = table.rows();
    std::vector<double> s(n);
    std::vector<CurveEval> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = table.cell(i, 0);
        samples[i].sigma = {table.cell(i, 1), table.cell(i, 2)};
        samples[i].d1 = {table.cell(i, 3), table.cell(i, 4)};
        samples[i].d2 = {table.cell(i, 5), table.cell(i, 6)};
        samples[i].d3 = {table.cell(i, 7), table.cell(i, 8)};
    }
    double T = 0.0;
    if (auto it = table.metadata.find("T"); it != table.metadata.end()) {
        T = it->second;
    } else if (n >= 2) {
        T = n * (s[1] - s[0]);  // uniform spacing assumed when no metadata
    }
    if (!(T > 0.0)) throw ParseError("Curve::read_csv: missing or invalid period");
    return from_samples(std::move(s), samples, T);
}

}  // namespace bikevhc
