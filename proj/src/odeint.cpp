#include "bikevhc/odeint.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bikevhc::odeint {

namespace {

bool all_finite(const State& v) {
    for (double a : v)
        if (!std::isfinite(a)) return false;
    return true;
}

State hermite(double ta, const State& xa, const State& fa, double tb, const State& xb,
              const State& fb, double t) {
    const double h = tb - ta;
    const double th = (t - ta) / h;
    const double t2 = th * th, t3 = t2 * th;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + th;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    State out(xa.size());
    for (std::size_t i = 0; i < xa.size(); ++i)
        out[i] = h00 * xa[i] + h10 * h * fa[i] + h01 * xb[i] + h11 * h * fb[i];
    return out;
}

struct EventTracker {
    std::vector<double> g_prev;

    void init(const std::vector<EventSpec>& events, double t, const State& x) {
        g_prev.resize(events.size());
        for (std::size_t k = 0; k < events.size(); ++k) g_prev[k] = events[k].guard(t, x);
    }

    static bool triggered(Direction dir, double g0, double g1) {
        switch (dir) {
            case Direction::rising: return g0 < 0.0 && g1 >= 0.0;
            case Direction::falling: return g0 > 0.0 && g1 <= 0.0;
            case Direction::any: return (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0);
        }
        return false;
    }

    // Locates triggered events inside an accepted step and records them in
    // time order. Returns true when a terminal event truncates the
    // integration; the truncated sample is appended to the trajectory.
    bool process(const std::vector<EventSpec>& events, Integration& out, double ta,
                 const State& xa, const State& fa, double tb, const State& xb, const State& fb) {
        struct Located {
            EventHit hit;
            bool terminal;
        };
        std::vector<Located> found;

        for (std::size_t k = 0; k < events.size(); ++k) {
            const double g0 = g_prev[k];
            const double g1 = events[k].guard(tb, xb);
            g_prev[k] = g1;
            if (!triggered(events[k].direction, g0, g1)) continue;

            double lo = ta, hi = tb, glo = g0;
            while (hi - lo > 1e-10) {
                const double mid = 0.5 * (lo + hi);
                const State xm = hermite(ta, xa, fa, tb, xb, fb, mid);
                const double gm = events[k].guard(mid, xm);
                if (gm == 0.0 || (glo < 0.0) != (gm < 0.0)) {
                    hi = mid;
                } else {
                    lo = mid;
                    glo = gm;
                }
            }
            found.push_back({{k, hi, hermite(ta, xa, fa, tb, xb, fb, hi)}, events[k].terminal});
        }
        if (found.empty()) return false;

        std::sort(found.begin(), found.end(),
                  [](const Located& a, const Located& b) { return a.hit.t < b.hit.t; });
        for (const Located& ev : found) {
            out.events.push_back(ev.hit);
            if (ev.terminal) {
                out.t.push_back(ev.hit.t);
                out.x.push_back(ev.hit.x);
                out.f.push_back(fb);  // derivative at tb is the nearest available
                out.status = Status::event_terminated;
                return true;
            }
        }
        return false;
    }
};

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

Integration run_rk45(const Rhs& rhs, double t0, State x0, double t1, const IntegratorConfig& cfg,
                     const std::vector<EventSpec>& events) {
    Integration out;
    const std::size_t n = x0.size();
    State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), xt(n), xn(n);

    double t = t0;
    rhs(t, x0, k1);
    if (!all_finite(k1) || !all_finite(x0)) {
        out.status = Status::nonfinite_state;
        out.message = "non-finite state or derivative at initial condition";
        out.t.push_back(t);
        out.x.push_back(x0);
        out.f.push_back(k1);
        return out;
    }

    out.t.push_back(t);
    out.x.push_back(x0);
    out.f.push_back(k1);

    EventTracker tracker;
    tracker.init(events, t, x0);

    double h = std::min({cfg.h_max, (t1 - t0) / 16.0, 1e-2 * (t1 - t0) + 1e-6});
    h = std::max(h, cfg.h_min);

    long steps = 0;
    State x = std::move(x0);
    while (t < t1) {
        if (++steps > cfg.max_steps) {
            out.status = Status::max_steps_exceeded;
            out.message = "max_steps exceeded";
            return out;
        }
        h = std::min(h, t1 - t);

        auto stage = [&](State& xs, auto&&... terms) {
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                ((acc += terms.first * terms.second[i]), ...);
                xs[i] = x[i] + h * acc;
            }
        };
        using P = std::pair<double, const State&>;
        stage(xt, P{a21, k1});
        rhs(t + c2 * h, xt, k2);
        stage(xt, P{a31, k1}, P{a32, k2});
        rhs(t + c3 * h, xt, k3);
        stage(xt, P{a41, k1}, P{a42, k2}, P{a43, k3});
        rhs(t + c4 * h, xt, k4);
        stage(xt, P{a51, k1}, P{a52, k2}, P{a53, k3}, P{a54, k4});
        rhs(t + c5 * h, xt, k5);
        stage(xt, P{a61, k1}, P{a62, k2}, P{a63, k3}, P{a64, k4}, P{a65, k5});
        rhs(t + h, xt, k6);
        stage(xn, P{b1, k1}, P{b3, k3}, P{b4, k4}, P{b5, k5}, P{b6, k6});
        rhs(t + h, xn, k7);

        if (!all_finite(xn) || !all_finite(k7)) {
            out.status = Status::nonfinite_state;
            out.message = "non-finite state during integration at t=" + std::to_string(t);
            return out;
        }

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc = cfg.atol + cfg.rtol * std::max(std::abs(x[i]), std::abs(xn[i]));
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                                  e7 * k7[i]);
            err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / static_cast<double>(n));

        if (err <= 1.0) {
            const double ta = t, tb = t + h;
            out.t.push_back(tb);
            out.x.push_back(xn);
            out.f.push_back(k7);
            if (!events.empty() &&
                tracker.process(events, out, ta, x, k1, tb, xn, k7)) {
                // terminal event appended an extra truncated sample; drop the
                // full step that overshoots it
                out.t.erase(out.t.end() - 2);
                out.x.erase(out.x.end() - 2);
                out.f.erase(out.f.end() - 2);
                return out;
            }
            t = tb;
            x = xn;
            k1 = k7;  // FSAL
        }

        const double fac = (err <= 0.0) ? 5.0 : 0.9 * std::pow(err, -0.2);
        h *= std::clamp(fac, 0.2, 5.0);
        h = std::min(h, cfg.h_max);
        if (h < cfg.h_min) {
            if (t + cfg.h_min >= t1) break;  // only a sub-h_min tail remains
            out.status = Status::step_underflow;
            out.message = "step size underflow at t=" + std::to_string(t);
            return out;
        }
    }
    return out;
}

Integration run_rk4(const Rhs& rhs, double t0, State x0, double t1, const IntegratorConfig& cfg,
                    const std::vector<EventSpec>& events) {
    Integration out;
    const std::size_t n = x0.size();
    State k1(n), k2(n), k3(n), k4(n), xt(n), xn(n), fn(n);

    double t = t0;
    rhs(t, x0, k1);
    out.t.push_back(t);
    out.x.push_back(x0);
    out.f.push_back(k1);

    EventTracker tracker;
    tracker.init(events, t, x0);

    long steps = 0;
    State x = std::move(x0);
    while (t < t1 - 1e-300) {
        if (++steps > cfg.max_steps) {
            out.status = Status::max_steps_exceeded;
            out.message = "max_steps exceeded";
            return out;
        }
        const double h = std::min(cfg.step, t1 - t);
        for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + 0.5 * h * k1[i];
        rhs(t + 0.5 * h, xt, k2);
        for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + 0.5 * h * k2[i];
        rhs(t + 0.5 * h, xt, k3);
        for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + h * k3[i];
        rhs(t + h, xt, k4);
        for (std::size_t i = 0; i < n; ++i)
            xn[i] = x[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        rhs(t + h, xn, fn);

        if (!all_finite(xn) || !all_finite(fn)) {
            out.status = Status::nonfinite_state;
            out.message = "non-finite state during integration at t=" + std::to_string(t);
            return out;
        }

        const double ta = t, tb = t + h;
        out.t.push_back(tb);
        out.x.push_back(xn);
        out.f.push_back(fn);
        if (!events.empty() && tracker.process(events, out, ta, x, k1, tb, xn, fn)) {
            out.t.erase(out.t.end() - 2);
            out.x.erase(out.x.end() - 2);
            out.f.erase(out.f.end() - 2);
            return out;
        }
        t = tb;
        x = xn;
        k1 = fn;
    }
    return out;
}

}  // namespace

State Integration::sample(double ti) const {
    if (t.empty()) throw std::invalid_argument("Integration::sample: empty trajectory");
    if (ti <= t.front()) return x.front();
    if (ti >= t.back()) return x.back();
    auto it = std::upper_bound(t.begin(), t.end(), ti);
    const std::size_t j = static_cast<std::size_t>(it - t.begin());
    return hermite(t[j - 1], x[j - 1], f[j - 1], t[j], x[j], f[j], ti);
}

Integration integrate(const Rhs& rhs, double t0, State x0, double t1,
                      const IntegratorConfig& cfg, const std::vector<EventSpec>& events) {
    if (!(t1 >= t0)) throw std::invalid_argument("integrate: t1 must be >= t0");
    if (cfg.method == Method::rk4_fixed && !(cfg.step > 0.0))
        throw std::invalid_argument("integrate: fixed step must be > 0");
    if (cfg.method == Method::rk45_adaptive && !(cfg.rtol > 0.0 && cfg.atol > 0.0))
        throw std::invalid_argument("integrate: rtol and atol must be > 0");
    if (!(cfg.h_min <= cfg.h_max)) throw std::invalid_argument("integrate: h_min > h_max");
    if (x0.empty()) throw std::invalid_argument("integrate: empty state");

    if (t1 == t0) {
        Integration out;
        State f0(x0.size());
        rhs(t0, x0, f0);
        out.t.push_back(t0);
        out.x.push_back(std::move(x0));
        out.f.push_back(std::move(f0));
        return out;
    }
    return cfg.method == Method::rk45_adaptive ? run_rk45(rhs, t0, std::move(x0), t1, cfg, events)
                                               : run_rk4(rhs, t0, std::move(x0), t1, cfg, events);
}

}  // namespace bikevhc::odeint
