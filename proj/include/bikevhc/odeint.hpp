#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace bikevhc::odeint {

using State = std::vector<double>;
using Rhs = std::function<void(double t, const State& x, State& dxdt)>;

enum class Method { rk4_fixed, rk45_adaptive };

struct IntegratorConfig {
    Method method = Method::rk45_adaptive;
    double step = 1e-3;  // rk4_fixed step size
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_min = 1e-14;
    double h_max = std::numeric_limits<double>::infinity();
    long max_steps = 4'000'000;
};

enum class Direction { rising, falling, any };

/// Scalar guard whose zero crossing along the solution marks an event.
/// Crossings are located by bisection on dense output to 1e-10 in time.
struct EventSpec {
    std::function<double(double t, const State& x)> guard;
    Direction direction = Direction::any;
    bool terminal = false;
};

struct EventHit {
    std::size_t index;  // position in the events list passed to integrate()
    double t;
    State x;
};

enum class Status { ok, event_terminated, max_steps_exceeded, step_underflow, nonfinite_state };

/// Accepted-step samples with derivatives; evaluable anywhere in between via
/// cubic Hermite interpolation.
class Integration {
public:
    Status status = Status::ok;
    std::string message;

    std::vector<double> t;
    std::vector<State> x;
    std::vector<State> f;
    std::vector<EventHit> events;

    bool ok() const { return status == Status::ok || status == Status::event_terminated; }
    double end_time() const { return t.back(); }
    const State& end_state() const { return x.back(); }
    State sample(double ti) const;
};

/// Integrates dx/dt = rhs(t, x) from t0 to t1 (t1 >= t0).
///
/// Runtime failures (step underflow, non-finite state, step budget) are
/// reported through Integration::status together with the partial trajectory;
/// malformed configuration throws std::invalid_argument.
Integration integrate(const Rhs& rhs, double t0, State x0, double t1,
                      const IntegratorConfig& cfg = {}, const std::vector<EventSpec>& events = {});

}  // namespace bikevhc::odeint
