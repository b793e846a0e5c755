// Deterministic 50 Hz episode loop and the cooperative controller contract.
//
// Every tick has two phases, in this order:
//   1. controller phase - the active turn (if any) advances one rotation
//      step, then each runnable controller task resumes until it blocks
//      (turn/wait/yield) or finishes;
//   2. fixed update - acceleration step, speeds, rotate, translate, physics,
//      removal check, blink-buffer push, completion/failure check.
// Controllers therefore never observe a half-updated world, and a RunResult
// is a pure function of (scenario, controller, limits, calibration).
//
// turn() mirrors the blocking turn of the reference library: it zeroes the
// speed state variables instantly (this deliberately bypasses the 9-pp
// acceleration ramp), then the runtime rotates the robot by one step per tick
// until the stop orientation is reached; the awaiting task resumes on the
// tick after the final step. The belt-gain perturbation does not affect
// turn(), which commands orientation directly rather than the belts.
#pragma once

#include <cmath>
#include <coroutine>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "beltbot/calibration.hpp"
#include "beltbot/dynamics.hpp"
#include "beltbot/scenario.hpp"
#include "beltbot/sensors.hpp"

namespace beltbot {

enum class Outcome { completed, timeout, drove_off, error };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::completed: return "completed";
    case Outcome::timeout: return "timeout";
    case Outcome::drove_off: return "drove_off";
    default: return "error";
  }
}

inline Outcome outcome_from_string(const std::string& s) {
  if (s == "completed") return Outcome::completed;
  if (s == "timeout") return Outcome::timeout;
  if (s == "drove_off") return Outcome::drove_off;
  if (s == "error") return Outcome::error;
  throw ConfigError("unknown outcome: " + s);
}

struct RunLimits {
  double timeout_s = 300.0;
  /// Trajectory sampling stride in ticks; 0 disables trajectory recording.
  int trajectory_stride = 1;
  /// Controller API calls allowed per tick before the run is failed; turns a
  /// non-yielding controller loop into a diagnosable error.
  int fuel_per_tick = 10000;
};

struct SensorSnapshot {
  double reflection = 0.0;
  std::optional<double> ultrasound;
  double blink = 0.0;
  double red_left = 0.0;
  double red_right = 0.0;
};

struct CubeSample {
  int id = 0;
  Vec2 position;
  double heading_deg = 0.0;
  bool removed = false;
};

/// `tick` counts completed fixed updates; the tick-0 sample is the initial
/// state. Sensor values are what a controller would read on the next tick.
struct TrajectorySample {
  std::int64_t tick = 0;
  Pose robot;
  std::vector<CubeSample> cubes;
  SensorSnapshot sensors;
};

struct RemovalEvent {
  int cube_id = 0;
  std::int64_t tick = 0;  // fixed-update count at which the cube vanished
};

struct RunResult {
  Outcome outcome = Outcome::error;
  std::optional<double> completion_time_s;  // present iff completed
  std::string diagnostic;
  std::int64_t final_tick = 0;
  std::vector<RemovalEvent> removals;
  std::vector<TrajectorySample> trajectory;
};

/// Resumable controller task handle (move-only).
class ControllerTask {
 public:
  struct promise_type {
    std::exception_ptr error;

    ControllerTask get_return_object() {
      return ControllerTask(
          std::coroutine_handle<promise_type>::from_promise(*this));
    }
    std::suspend_always initial_suspend() noexcept { return {}; }
    std::suspend_always final_suspend() noexcept { return {}; }
    void return_void() {}
    void unhandled_exception() { error = std::current_exception(); }
  };

  ControllerTask() = default;
  ControllerTask(ControllerTask&& o) noexcept : h_(std::exchange(o.h_, {})) {}
  ControllerTask& operator=(ControllerTask&& o) noexcept {
    if (this != &o) {
      destroy();
      h_ = std::exchange(o.h_, {});
    }
    return *this;
  }
  ControllerTask(const ControllerTask&) = delete;
  ControllerTask& operator=(const ControllerTask&) = delete;
  ~ControllerTask() { destroy(); }

  bool done() const { return !h_ || h_.done(); }
  void resume() {
    if (h_ && !h_.done()) h_.resume();
  }
  std::exception_ptr take_error() {
    return h_ ? std::exchange(h_.promise().error, nullptr) : nullptr;
  }

 private:
  explicit ControllerTask(std::coroutine_handle<promise_type> h) : h_(h) {}
  void destroy() {
    if (h_) {
      h_.destroy();
      h_ = {};
    }
  }
  std::coroutine_handle<promise_type> h_;
};

class Episode;

struct TickAwaiter {
  Episode* ep;
  bool await_ready() const noexcept { return false; }
  void await_suspend(std::coroutine_handle<>);
  void await_resume() const noexcept {}
};

struct WaitAwaiter {
  Episode* ep;
  double ms;
  bool await_ready() const;
  void await_suspend(std::coroutine_handle<>);
  void await_resume() const noexcept {}
};

struct TurnAwaiter {
  Episode* ep;
  double degrees;
  double speed_pct;
  bool await_ready() const;
  void await_suspend(std::coroutine_handle<>);
  void await_resume() const noexcept {}
};

/// The robot API handed to controllers. Blocking primitives (turn, wait,
/// yield_tick) must be awaited; sensor reads evaluate the current world.
class Robot {
 public:
  void set_motor(double left_pct, double right_pct);
  /// Blocking turn by `degrees` (positive = counter-clockwise) at
  /// `speed_pct` motor speed. Zero speed is an error.
  TurnAwaiter turn(double degrees, double speed_pct);
  /// Blocking wait; motors keep their last commanded values meanwhile.
  WaitAwaiter wait(double ms);
  /// Suspend until the next tick's controller phase.
  TickAwaiter yield_tick();

  double read_reflection();
  std::optional<double> read_ultrasound();
  double read_blink();
  double read_red(SensorSide side);

  std::int64_t tick() const;
  double elapsed_ms() const;
  double tick_ms() const;

 private:
  friend class Episode;
  explicit Robot(Episode* ep) : ep_(ep) {}
  Episode* ep_;
};

/// A controller factory: invoked once per episode with the episode's Robot.
/// Must outlive the episode run it is used for.
using Controller = std::function<ControllerTask(Robot&)>;

class Episode {
 public:
  Episode(const Scenario& scenario, const RunLimits& limits,
          const Calibration& cal)
      : cal_(cal),
        limits_(limits),
        world_(make_world(scenario)),
        robot_(scenario.robot_start),
        blink_(cal.fits.blink_delay_ticks(cal.constants)),
        dt_(cal.constants.tick_s()) {
    validate(scenario);
  }

  RunResult run(const Controller& controller) {
    for (int id : update_removals(world_))
      result_.removals.push_back({id, 0});
    record_sample();
    if (task_complete(world_)) {
      finish(Outcome::completed, 0.0);
    } else if (robot_failed(world_.arena, robot_, cal_.robot)) {
      finish(Outcome::drove_off);
    }

    if (!finished_) {
      tasks_.push_back(TaskRecord{controller(api_), 0, false});
      const auto max_ticks =
          static_cast<std::int64_t>(std::llround(limits_.timeout_s / dt_));
      while (!finished_ && tick_ < max_ticks) {
        controller_phase();
        if (finished_) break;
        fixed_update();
      }
      if (!finished_) finish(Outcome::timeout);
    }
    tasks_.clear();  // destroy coroutines before the episode state they use
    return std::move(result_);
  }

 private:
  friend class Robot;
  friend struct TickAwaiter;
  friend struct WaitAwaiter;
  friend struct TurnAwaiter;

  struct TaskRecord {
    ControllerTask task;
    std::int64_t wake_tick = 0;
    bool in_turn = false;
  };

  struct TurnState {
    bool active = false;
    std::size_t task_index = 0;
    double dir = 1.0;
    double remaining_deg = 0.0;
    double step_deg = 0.0;
  };

  void controller_phase() {
    fuel_used_ = 0;
    if (turn_.active) step_turn();
    for (std::size_t i = 0; i < tasks_.size() && !finished_; ++i) {
      TaskRecord& t = tasks_[i];
      if (t.task.done() || t.in_turn || t.wake_tick > tick_) continue;
      current_task_ = i;
      t.task.resume();
      if (std::exception_ptr err = t.task.take_error()) {
        std::string msg = "controller raised an unknown error";
        try {
          std::rethrow_exception(err);
        } catch (const std::exception& e) {
          msg = e.what();
        } catch (...) {
        }
        finish(Outcome::error);
        result_.diagnostic = msg;
      }
    }
  }

  void fixed_update() {
    step_acceleration(motor_, cal_.constants);
    double v = effective_translation_speed(motor_, pushing_, cal_.constants);
    double omega = effective_angular_speed(motor_, cal_.constants);
    robot_ = integrate_pose(robot_, v, omega, dt_);
    Vec2 velocity = heading_dir(robot_.heading_deg) * v;
    PhysicsOutcome ph =
        step_physics(world_, robot_obb(robot_, cal_.robot), velocity, dt_);
    pushing_ = ph.robot_contact;
    ++tick_;
    for (int id : ph.newly_removed) result_.removals.push_back({id, tick_});
    blink_.push(blink_raw_combined(world_, robot_, cal_));
    if (task_complete(world_)) {
      finish(Outcome::completed, static_cast<double>(tick_) * dt_);
    } else if (robot_failed(world_.arena, robot_, cal_.robot)) {
      finish(Outcome::drove_off);
    }
    record_sample();
  }

  void step_turn() {
    double s = std::min(turn_.step_deg, turn_.remaining_deg);
    robot_.heading_deg = wrap_deg_360(robot_.heading_deg + turn_.dir * s);
    turn_.remaining_deg -= s;
    if (turn_.remaining_deg <= 1e-9) {
      turn_.active = false;
      tasks_[turn_.task_index].in_turn = false;
      tasks_[turn_.task_index].wake_tick = tick_ + 1;
    }
  }

  void begin_turn(double degrees, double speed_pct) {
    double rate = cal_.constants.turn_slope_deg_s_per_pct * 2.0 *
                  std::min(std::abs(speed_pct),
                           cal_.constants.turn_saturation_pct);
    turn_.active = true;
    turn_.task_index = current_task_;
    turn_.dir = degrees >= 0.0 ? 1.0 : -1.0;
    turn_.remaining_deg = std::abs(degrees);
    turn_.step_deg = rate * dt_;
    tasks_[current_task_].in_turn = true;
    step_turn();
  }

  void zero_belts() {
    motor_.coded_left = motor_.coded_right = 0.0;
    motor_.effective_left = motor_.effective_right = 0.0;
  }

  void consume_fuel() {
    if (++fuel_used_ > limits_.fuel_per_tick)
      throw std::runtime_error(
          "controller exceeded " + std::to_string(limits_.fuel_per_tick) +
          " API calls in one tick without yielding");
  }

  void schedule_wake(std::int64_t wake_tick) {
    tasks_[current_task_].wake_tick = wake_tick;
  }

  void finish(Outcome o, std::optional<double> completion_time = std::nullopt) {
    finished_ = true;
    result_.outcome = o;
    result_.completion_time_s = completion_time;
    result_.final_tick = tick_;
  }

  void record_sample() {
    if (limits_.trajectory_stride <= 0) return;
    if (tick_ % limits_.trajectory_stride != 0 && !finished_) return;
    if (!result_.trajectory.empty() &&
        result_.trajectory.back().tick == tick_)
      return;
    TrajectorySample s;
    s.tick = tick_;
    s.robot = robot_;
    s.cubes.reserve(world_.cubes.size());
    for (const Cube& c : world_.cubes)
      s.cubes.push_back({c.id, c.position, c.heading_deg, c.removed});
    s.sensors.reflection = read_reflection(world_, robot_, cal_);
    s.sensors.ultrasound = read_ultrasound(world_, robot_, cal_);
    s.sensors.blink = blink_.read();
    s.sensors.red_left = read_red(world_, robot_, SensorSide::left, cal_);
    s.sensors.red_right = read_red(world_, robot_, SensorSide::right, cal_);
    result_.trajectory.push_back(std::move(s));
  }

  const Calibration& cal_;
  RunLimits limits_;
  WorldState world_;
  Pose robot_;
  MotorState motor_;
  BlinkDelayLine blink_;
  TurnState turn_;
  std::vector<TaskRecord> tasks_;
  std::size_t current_task_ = 0;
  std::int64_t tick_ = 0;
  int fuel_used_ = 0;
  bool pushing_ = false;  // robot-cube contact in the previous fixed update
  bool finished_ = false;
  double dt_;
  RunResult result_;
  Robot api_{this};
};

// --- Robot / awaiter implementations -----------------------------------------

inline void Robot::set_motor(double left_pct, double right_pct) {
  ep_->consume_fuel();
  set_coded(ep_->motor_, left_pct, right_pct);
}

inline TurnAwaiter Robot::turn(double degrees, double speed_pct) {
  return TurnAwaiter{ep_, degrees, speed_pct};
}

inline WaitAwaiter Robot::wait(double ms) { return WaitAwaiter{ep_, ms}; }

inline TickAwaiter Robot::yield_tick() { return TickAwaiter{ep_}; }

inline double Robot::read_reflection() {
  ep_->consume_fuel();
  return beltbot::read_reflection(ep_->world_, ep_->robot_, ep_->cal_);
}

inline std::optional<double> Robot::read_ultrasound() {
  ep_->consume_fuel();
  return beltbot::read_ultrasound(ep_->world_, ep_->robot_, ep_->cal_);
}

inline double Robot::read_blink() {
  ep_->consume_fuel();
  return ep_->blink_.read();
}

inline double Robot::read_red(SensorSide side) {
  ep_->consume_fuel();
  return beltbot::read_red(ep_->world_, ep_->robot_, side, ep_->cal_);
}

inline std::int64_t Robot::tick() const { return ep_->tick_; }

inline double Robot::elapsed_ms() const {
  return static_cast<double>(ep_->tick_) * ep_->cal_.constants.tick_ms();
}

inline double Robot::tick_ms() const { return ep_->cal_.constants.tick_ms(); }

inline void TickAwaiter::await_suspend(std::coroutine_handle<>) {
  ep->consume_fuel();
  ep->schedule_wake(ep->tick_ + 1);
}

inline bool WaitAwaiter::await_ready() const {
  ep->consume_fuel();
  if (ms < 0.0) throw std::invalid_argument("wait: negative duration");
  return ms == 0.0;
}

inline void WaitAwaiter::await_suspend(std::coroutine_handle<>) {
  auto ticks = static_cast<std::int64_t>(
      std::ceil(ms / ep->cal_.constants.tick_ms()));
  ep->schedule_wake(ep->tick_ + std::max<std::int64_t>(1, ticks));
}

inline bool TurnAwaiter::await_ready() const {
  ep->consume_fuel();
  if (speed_pct == 0.0) throw std::invalid_argument("turn: zero speed");
  if (ep->cal_.constants.turn_slope_deg_s_per_pct <= 0.0)
    throw std::invalid_argument("turn: non-positive turn slope");
  ep->zero_belts();
  return degrees == 0.0;
}

inline void TurnAwaiter::await_suspend(std::coroutine_handle<>) {
  ep->begin_turn(degrees, speed_pct);
}

/// Run one episode. The controller object must outlive the call.
inline RunResult run_episode(const Scenario& scenario,
                             const Controller& controller,
                             const RunLimits& limits,
                             const Calibration& cal) {
  Episode ep(scenario, limits, cal);
  return ep.run(controller);
}

// --- RunResult serialization --------------------------------------------------

inline nlohmann::ordered_json sample_to_json(const TrajectorySample& s) {
  nlohmann::ordered_json j;
  j["tick"] = s.tick;
  j["robot"] = {{"x", s.robot.x},
                {"y", s.robot.y},
                {"heading_deg", s.robot.heading_deg}};
  auto cubes = nlohmann::ordered_json::array();
  for (const CubeSample& c : s.cubes) {
    nlohmann::ordered_json cj;
    cj["id"] = c.id;
    cj["x"] = c.position.x;
    cj["y"] = c.position.y;
    cj["heading_deg"] = c.heading_deg;
    cj["removed"] = c.removed;
    cubes.push_back(cj);
  }
  j["cubes"] = std::move(cubes);
  nlohmann::ordered_json sj;
  sj["reflection"] = s.sensors.reflection;
  if (s.sensors.ultrasound)
    sj["ultrasound"] = *s.sensors.ultrasound;
  else
    sj["ultrasound"] = nullptr;
  sj["blink"] = s.sensors.blink;
  sj["red_left"] = s.sensors.red_left;
  sj["red_right"] = s.sensors.red_right;
  j["sensors"] = std::move(sj);
  return j;
}

inline TrajectorySample sample_from_json(const nlohmann::json& j) {
  TrajectorySample s;
  s.tick = j.at("tick").get<std::int64_t>();
  s.robot = {j.at("robot").at("x").get<double>(),
             j.at("robot").at("y").get<double>(),
             j.at("robot").at("heading_deg").get<double>()};
  for (const auto& cj : j.at("cubes")) {
    CubeSample c;
    c.id = cj.at("id").get<int>();
    c.position = {cj.at("x").get<double>(), cj.at("y").get<double>()};
    c.heading_deg = cj.at("heading_deg").get<double>();
    c.removed = cj.at("removed").get<bool>();
    s.cubes.push_back(c);
  }
  const auto& sj = j.at("sensors");
  s.sensors.reflection = sj.at("reflection").get<double>();
  if (!sj.at("ultrasound").is_null())
    s.sensors.ultrasound = sj.at("ultrasound").get<double>();
  s.sensors.blink = sj.at("blink").get<double>();
  s.sensors.red_left = sj.at("red_left").get<double>();
  s.sensors.red_right = sj.at("red_right").get<double>();
  return s;
}

inline nlohmann::ordered_json run_result_to_json(
    const RunResult& r, bool include_trajectory = true) {
  nlohmann::ordered_json j;
  j["outcome"] = to_string(r.outcome);
  if (r.completion_time_s)
    j["completion_time_s"] = *r.completion_time_s;
  else
    j["completion_time_s"] = nullptr;
  j["diagnostic"] = r.diagnostic;
  j["final_tick"] = r.final_tick;
  auto removals = nlohmann::ordered_json::array();
  for (const RemovalEvent& e : r.removals)
    removals.push_back({{"cube", e.cube_id}, {"tick", e.tick}});
  j["removals"] = std::move(removals);
  if (include_trajectory) {
    auto t = nlohmann::ordered_json::array();
    for (const TrajectorySample& s : r.trajectory)
      t.push_back(sample_to_json(s));
    j["trajectory"] = std::move(t);
  }
  return j;
}

inline RunResult run_result_from_json(const nlohmann::json& j) {
  RunResult r;
  r.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  if (!j.at("completion_time_s").is_null())
    r.completion_time_s = j.at("completion_time_s").get<double>();
  r.diagnostic = j.value("diagnostic", std::string{});
  r.final_tick = j.at("final_tick").get<std::int64_t>();
  for (const auto& ej : j.at("removals"))
    r.removals.push_back(
        {ej.at("cube").get<int>(), ej.at("tick").get<std::int64_t>()});
  if (j.contains("trajectory"))
    for (const auto& sj : j.at("trajectory"))
      r.trajectory.push_back(sample_from_json(sj));
  return r;
}

}  // namespace beltbot
