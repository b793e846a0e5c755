// Batch evaluation: starting-position sets, perturbations, the parallel batch
// runner, completion-time statistics and result export (CSV/JSON/JSONL/SVG).
#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "beltbot/runtime.hpp"

namespace beltbot {

// --- starting-position sets ----------------------------------------------------

struct Start {
  Pose pose;
  std::optional<Scenario> scenario_override;
};

struct StartSet {
  std::string name;
  std::string provenance;  // "grid", "random(seed=...)", "file"
  std::vector<Start> starts;
};

/// Touching counts as overlapping: such configurations are removed.
inline bool start_clear_of_cubes(const Scenario& scn, const RobotShape& shape,
                                 const Pose& pose) {
  Obb rb = robot_obb(pose, shape);
  for (const Cube& c : scn.cubes) {
    if (c.removed) continue;
    if (obb_penetration(rb, cube_obb(c)) >= 0.0) return false;
  }
  return true;
}

/// Deterministic grid of count/4 positions x 4 major headings. Positions come
/// row-major (top-left first) from the smallest g x g grid over the inset
/// white area with enough cube-clear points; blocked points are skipped and
/// replaced by the next grid point. The inset keeps the footprint inside the
/// white area at any heading.
inline StartSet grid_starts(const Scenario& scn, const Calibration& cal,
                            int count = 20) {
  if (count <= 0 || count % 4 != 0)
    throw ConfigError("grid start count must be a positive multiple of 4");
  const int positions = count / 4;
  const double inset = cal.robot.half_diagonal();
  const double x_max = scn.arena.white_half_w() - inset;
  const double y_max = scn.arena.white_half_h() - inset;
  if (x_max <= 0.0 || y_max <= 0.0)
    throw ConfigError("arena too small for the robot footprint");
  const double headings[4] = {0.0, 90.0, 180.0, 270.0};

  int g0 = std::max(1, static_cast<int>(std::ceil(std::sqrt(
                           static_cast<double>(positions)))));
  for (int g = g0; g <= 64; ++g) {
    std::vector<Vec2> accepted;
    for (int row = 0; row < g && static_cast<int>(accepted.size()) < positions;
         ++row) {
      double y = g == 1 ? 0.0 : y_max - 2.0 * y_max * row / (g - 1);
      for (int col = 0;
           col < g && static_cast<int>(accepted.size()) < positions; ++col) {
        double x = g == 1 ? 0.0 : -x_max + 2.0 * x_max * col / (g - 1);
        bool clear = true;
        for (double h : headings)
          if (!start_clear_of_cubes(scn, cal.robot, {x, y, h})) {
            clear = false;
            break;
          }
        if (clear) accepted.push_back({x, y});
      }
    }
    if (static_cast<int>(accepted.size()) == positions) {
      StartSet set;
      set.name = "grid" + std::to_string(count);
      set.provenance = "grid";
      for (Vec2 p : accepted)
        for (double h : headings)
          set.starts.push_back({Pose{p.x, p.y, h}, std::nullopt});
      return set;
    }
  }
  throw ConfigError("could not place grid starts clear of cubes");
}

/// Rejection-sampled uniform poses over the inset white area; poses touching
/// a cube are redrawn. Deterministic for a given seed on any platform.
inline StartSet random_starts(const Scenario& scn, const Calibration& cal,
                              int count = 99, std::uint64_t seed = 0) {
  if (count <= 0) throw ConfigError("random start count must be positive");
  const double inset = cal.robot.half_diagonal();
  const double x_max = scn.arena.white_half_w() - inset;
  const double y_max = scn.arena.white_half_h() - inset;
  if (x_max <= 0.0 || y_max <= 0.0)
    throw ConfigError("arena too small for the robot footprint");

  std::mt19937_64 rng(seed);
  auto uniform01 = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };

  StartSet set;
  set.name = "random" + std::to_string(count);
  set.provenance = "random(seed=" + std::to_string(seed) + ")";
  long attempts = 0;
  const long max_attempts = std::max(10000L, 100L * count);
  while (static_cast<int>(set.starts.size()) < count) {
    if (++attempts > max_attempts)
      throw ConfigError(
          "random start rejection rate too high; cubes leave no room");
    Pose pose{-x_max + 2.0 * x_max * uniform01(),
              -y_max + 2.0 * y_max * uniform01(), 360.0 * uniform01()};
    if (!start_clear_of_cubes(scn, cal.robot, pose)) continue;
    set.starts.push_back({pose, std::nullopt});
  }
  return set;
}

/// Pure heading offset (degrees CCW) on every start.
inline StartSet perturb_rotation(StartSet set, double degrees = 1.0) {
  for (Start& s : set.starts)
    s.pose.heading_deg = wrap_deg_360(s.pose.heading_deg + degrees);
  set.name += degrees >= 0 ? "+rot" + std::to_string(degrees)
                           : "rot" + std::to_string(degrees);
  return set;
}

/// Scales the right belt's effective-speed contribution.
inline Calibration perturb_motor(Calibration cal, double right_gain = 1.01) {
  cal.constants.right_motor_gain *= right_gain;
  return cal;
}

// --- batch runner ---------------------------------------------------------------

/// One RunResult per start, order-stable and invariant to `parallelism`.
/// Episode-level failures (including controller errors) land in the results.
inline std::vector<RunResult> run_batch(const Scenario& base,
                                        const StartSet& set,
                                        const Controller& controller,
                                        const RunLimits& limits,
                                        const Calibration& cal,
                                        int parallelism = 1) {
  std::vector<RunResult> results(set.starts.size());
  if (set.starts.empty()) return results;

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= set.starts.size()) break;
      const Start& st = set.starts[i];
      Scenario s = st.scenario_override ? *st.scenario_override : base;
      s.robot_start = st.pose;
      try {
        results[i] = run_episode(s, controller, limits, cal);
      } catch (const std::exception& e) {
        RunResult r;
        r.outcome = Outcome::error;
        r.diagnostic = e.what();
        results[i] = std::move(r);
      }
    }
  };

  int workers = std::clamp(parallelism, 1,
                           static_cast<int>(set.starts.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int k = 0; k < workers; ++k) threads.emplace_back(work);
    for (std::thread& t : threads) t.join();
  }
  return results;
}

// --- statistics -----------------------------------------------------------------

/// Failed runs are excluded from mean/SD and counted separately. Sample SD
/// (n-1); undefined moments stay absent rather than fabricated.
struct SummaryStats {
  int completed = 0;
  int failed = 0;
  std::optional<double> mean_s;
  std::optional<double> sd_s;
};

inline SummaryStats summarize(const std::vector<RunResult>& results) {
  SummaryStats s;
  std::vector<double> times;
  for (const RunResult& r : results) {
    if (r.outcome == Outcome::completed && r.completion_time_s)
      times.push_back(*r.completion_time_s);
    else
      ++s.failed;
  }
  s.completed = static_cast<int>(times.size());
  if (times.empty()) return s;
  double sum = 0.0;
  for (double t : times) sum += t;
  double mean = sum / times.size();
  s.mean_s = mean;
  if (times.size() >= 2) {
    double ss = 0.0;
    for (double t : times) ss += (t - mean) * (t - mean);
    s.sd_s = std::sqrt(ss / (times.size() - 1));
  }
  return s;
}

/// Per-start absolute completion-time differences over starts completed in
/// both arms.
struct PairwiseDiff {
  int pairs = 0;
  std::vector<double> diffs;
  std::optional<double> mean_s;
  std::optional<double> sd_s;
};

inline PairwiseDiff pairwise_diffs(const std::vector<RunResult>& a,
                                   const std::vector<RunResult>& b) {
  if (a.size() != b.size())
    throw ConfigError("pairwise_diffs: result lists must come from the same "
                      "start set");
  PairwiseDiff d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].outcome != Outcome::completed ||
        b[i].outcome != Outcome::completed)
      continue;
    d.diffs.push_back(
        std::abs(*a[i].completion_time_s - *b[i].completion_time_s));
  }
  d.pairs = static_cast<int>(d.diffs.size());
  if (d.diffs.empty()) return d;
  double sum = 0.0;
  for (double x : d.diffs) sum += x;
  double mean = sum / d.diffs.size();
  d.mean_s = mean;
  if (d.diffs.size() >= 2) {
    double ss = 0.0;
    for (double x : d.diffs) ss += (x - mean) * (x - mean);
    d.sd_s = std::sqrt(ss / (d.diffs.size() - 1));
  }
  return d;
}

// --- export ----------------------------------------------------------------------

inline constexpr std::string_view kRunsCsvSchema = "beltbot-runs/1";
inline constexpr std::string_view kRunsCsvHeader =
    "start_index,solution,outcome,completion_time_s,final_tick,removed_cubes";
inline constexpr std::string_view kSummaryCsvSchema = "beltbot-summary/1";
inline constexpr std::string_view kSummaryCsvHeader =
    "solution,N,mean_s,sd_s,failed";
inline constexpr std::string_view kPairdiffCsvSchema = "beltbot-pairdiff/1";
inline constexpr std::string_view kPairdiffCsvHeader =
    "solution,pairs,diff_mean_s,diff_sd_s";

namespace detail {

inline std::string fmt(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v, const char* spec) {
  return v ? fmt(*v, spec) : std::string{};
}

}  // namespace detail

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << content;
  if (!out) throw ConfigError("write failed: " + path);
}

inline std::string runs_csv(const std::string& solution,
                            const std::vector<RunResult>& results) {
  std::string s;
  s += "#schema=";
  s += kRunsCsvSchema;
  s += "\n";
  s += kRunsCsvHeader;
  s += "\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const RunResult& r = results[i];
    s += std::to_string(i) + "," + solution + "," + to_string(r.outcome) +
         "," + detail::fmt_opt(r.completion_time_s, "%.3f") + "," +
         std::to_string(r.final_tick) + "," +
         std::to_string(r.removals.size()) + "\n";
  }
  return s;
}

inline std::string summary_csv(
    const std::vector<std::pair<std::string, SummaryStats>>& rows) {
  std::string s;
  s += "#schema=";
  s += kSummaryCsvSchema;
  s += "\n";
  s += kSummaryCsvHeader;
  s += "\n";
  for (const auto& [name, st] : rows)
    s += name + "," + std::to_string(st.completed) + "," +
         detail::fmt_opt(st.mean_s, "%.4f") + "," +
         detail::fmt_opt(st.sd_s, "%.4f") + "," + std::to_string(st.failed) +
         "\n";
  return s;
}

inline std::string pairdiff_csv(
    const std::vector<std::pair<std::string, PairwiseDiff>>& rows) {
  std::string s;
  s += "#schema=";
  s += kPairdiffCsvSchema;
  s += "\n";
  s += kPairdiffCsvHeader;
  s += "\n";
  for (const auto& [name, d] : rows)
    s += name + "," + std::to_string(d.pairs) + "," +
         detail::fmt_opt(d.mean_s, "%.4f") + "," +
         detail::fmt_opt(d.sd_s, "%.4f") + "\n";
  return s;
}

inline nlohmann::ordered_json summary_to_json(const SummaryStats& s) {
  nlohmann::ordered_json j;
  j["N"] = s.completed;
  j["mean_s"] = s.mean_s ? nlohmann::ordered_json(*s.mean_s)
                         : nlohmann::ordered_json(nullptr);
  j["sd_s"] = s.sd_s ? nlohmann::ordered_json(*s.sd_s)
                     : nlohmann::ordered_json(nullptr);
  j["failed"] = s.failed;
  return j;
}

inline nlohmann::ordered_json pairdiff_to_json(const PairwiseDiff& d) {
  nlohmann::ordered_json j;
  j["pairs"] = d.pairs;
  j["diff_mean_s"] = d.mean_s ? nlohmann::ordered_json(*d.mean_s)
                              : nlohmann::ordered_json(nullptr);
  j["diff_sd_s"] = d.sd_s ? nlohmann::ordered_json(*d.sd_s)
                          : nlohmann::ordered_json(nullptr);
  j["diffs"] = d.diffs;
  return j;
}

inline nlohmann::ordered_json results_to_json(
    const std::string& solution, const std::vector<RunResult>& results,
    bool include_trajectories = false) {
  nlohmann::ordered_json j;
  j["schema"] = "beltbot-results/1";
  j["solution"] = solution;
  auto arr = nlohmann::ordered_json::array();
  for (const RunResult& r : results)
    arr.push_back(run_result_to_json(r, include_trajectories));
  j["results"] = std::move(arr);
  return j;
}

inline std::vector<RunResult> results_from_json(const nlohmann::json& j) {
  if (j.value("schema", std::string{}) != "beltbot-results/1")
    throw ConfigError("results: unsupported or missing schema");
  std::vector<RunResult> out;
  for (const auto& rj : j.at("results"))
    out.push_back(run_result_from_json(rj));
  return out;
}

/// Canonical bytes of a batch, trajectories included; two runs of the same
/// batch must serialize identically.
inline std::string serialize_results(const std::string& solution,
                                     const std::vector<RunResult>& results) {
  return results_to_json(solution, results, true).dump();
}

inline nlohmann::ordered_json start_set_to_json(const StartSet& set) {
  nlohmann::ordered_json j;
  j["schema"] = "beltbot-starts/1";
  j["name"] = set.name;
  j["provenance"] = set.provenance;
  auto arr = nlohmann::ordered_json::array();
  for (const Start& s : set.starts) {
    nlohmann::ordered_json sj;
    sj["x"] = s.pose.x;
    sj["y"] = s.pose.y;
    sj["heading_deg"] = s.pose.heading_deg;
    if (s.scenario_override)
      sj["scenario"] = scenario_to_json(*s.scenario_override);
    arr.push_back(sj);
  }
  j["starts"] = std::move(arr);
  return j;
}

inline StartSet start_set_from_json(const nlohmann::json& j) {
  if (j.value("schema", std::string{}) != "beltbot-starts/1")
    throw ConfigError("start set: unsupported or missing schema");
  StartSet set;
  set.name = j.value("name", std::string{"file"});
  set.provenance = j.value("provenance", std::string{"file"});
  for (const auto& sj : j.at("starts")) {
    Start s;
    s.pose = {sj.at("x").get<double>(), sj.at("y").get<double>(),
              sj.at("heading_deg").get<double>()};
    if (sj.contains("scenario"))
      s.scenario_override = scenario_from_json(sj.at("scenario"));
    set.starts.push_back(std::move(s));
  }
  return set;
}

inline StartSet load_start_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open start-set file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("start-set file " + path + ": " + e.what());
  }
  StartSet set = start_set_from_json(j);
  set.provenance = "file";
  return set;
}

// --- trajectory log (JSONL) and SVG plot -----------------------------------------

/// First line: header with schema, arena and run outcome; then one sample
/// per line.
inline std::string trajectory_jsonl(const Arena& arena,
                                    const std::string& solution,
                                    const RunResult& r) {
  nlohmann::ordered_json head;
  head["schema"] = "beltbot-trajectory/1";
  head["solution"] = solution;
  head["arena"] = {{"cardboard_width", arena.cardboard_width},
                   {"cardboard_height", arena.cardboard_height},
                   {"fringe", arena.fringe}};
  head["outcome"] = to_string(r.outcome);
  head["completion_time_s"] =
      r.completion_time_s ? nlohmann::ordered_json(*r.completion_time_s)
                          : nlohmann::ordered_json(nullptr);
  head["final_tick"] = r.final_tick;
  std::string s = head.dump() + "\n";
  for (const TrajectorySample& sample : r.trajectory)
    s += sample_to_json(sample).dump() + "\n";
  return s;
}

struct TrajectoryDoc {
  Arena arena;
  std::string solution;
  std::string outcome;
  std::optional<double> completion_time_s;
  std::vector<TrajectorySample> samples;
};

inline TrajectoryDoc load_trajectory_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trajectory file: " + path);
  TrajectoryDoc doc;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("trajectory file " + path + ": " + e.what());
    }
    if (first && j.contains("schema")) {
      if (j.at("schema").get<std::string>() != "beltbot-trajectory/1")
        throw ConfigError("trajectory file " + path + ": unsupported schema");
      const auto& a = j.at("arena");
      doc.arena = make_arena(a.at("cardboard_width").get<double>(),
                             a.at("cardboard_height").get<double>(),
                             a.at("fringe").get<double>());
      doc.solution = j.value("solution", std::string{});
      doc.outcome = j.value("outcome", std::string{});
      if (j.contains("completion_time_s") &&
          !j.at("completion_time_s").is_null())
        doc.completion_time_s = j.at("completion_time_s").get<double>();
      first = false;
      continue;
    }
    first = false;
    doc.samples.push_back(sample_from_json(j));
  }
  return doc;
}

/// Deterministic 2D plot: arena, cube paths, robot path, removal markers.
inline std::string trajectory_svg(const TrajectoryDoc& doc) {
  const Arena& a = doc.arena;
  const double margin = 6.0;
  const double w = a.cardboard_width + 2.0 * margin;
  const double h = a.cardboard_height + 2.0 * margin;
  auto X = [&](double x) { return detail::fmt(x + a.half_w() + margin, "%.2f"); };
  auto Y = [&](double y) { return detail::fmt(a.half_h() - y + margin, "%.2f"); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " +
       detail::fmt(w, "%.2f") + " " + detail::fmt(h, "%.2f") +
       "\" font-family=\"sans-serif\">\n";
  s += "<rect x=\"" + X(-a.half_w()) + "\" y=\"" + Y(a.half_h()) +
       "\" width=\"" + detail::fmt(a.cardboard_width, "%.2f") +
       "\" height=\"" + detail::fmt(a.cardboard_height, "%.2f") +
       "\" fill=\"#c9a066\"/>\n";
  s += "<rect x=\"" + X(-a.white_half_w()) + "\" y=\"" + Y(a.white_half_h()) +
       "\" width=\"" + detail::fmt(a.white_width(), "%.2f") + "\" height=\"" +
       detail::fmt(a.white_height(), "%.2f") +
       "\" fill=\"#ffffff\" stroke=\"#888888\" stroke-width=\"0.4\"/>\n";

  auto polyline = [&](const std::vector<Vec2>& pts, const char* color,
                      const char* width) {
    if (pts.size() < 2) return std::string{};
    std::string p = "<polyline fill=\"none\" stroke=\"";
    p += color;
    p += "\" stroke-width=\"";
    p += width;
    p += "\" points=\"";
    for (const Vec2& v : pts) p += X(v.x) + "," + Y(v.y) + " ";
    p += "\"/>\n";
    return p;
  };

  // Cube paths up to removal, with an x marker where they vanished.
  std::vector<int> cube_ids;
  if (!doc.samples.empty())
    for (const CubeSample& c : doc.samples.front().cubes)
      cube_ids.push_back(c.id);
  for (std::size_t ci = 0; ci < cube_ids.size(); ++ci) {
    std::vector<Vec2> pts;
    std::optional<Vec2> removal_at;
    for (const TrajectorySample& smp : doc.samples) {
      if (ci >= smp.cubes.size()) break;
      const CubeSample& c = smp.cubes[ci];
      if (c.removed) {
        if (!pts.empty() && !removal_at) removal_at = pts.back();
        break;
      }
      pts.push_back(c.position);
    }
    const char* color = "#888888";
    switch (ci % 3) {
      case 0: color = "#cc3333"; break;
      case 1: color = "#33a033"; break;
      case 2: color = "#3366cc"; break;
    }
    s += polyline(pts, color, "0.8");
    if (!pts.empty()) {
      s += "<circle cx=\"" + X(pts.back().x) + "\" cy=\"" + Y(pts.back().y) +
           "\" r=\"1.2\" fill=\"" + color + "\"/>\n";
    }
    if (removal_at) {
      std::string cx = X(removal_at->x), cy = Y(removal_at->y);
      s += "<g stroke=\"" + std::string(color) + "\" stroke-width=\"0.8\">";
      s += "<line x1=\"" + detail::fmt(std::stod(cx) - 2.0, "%.2f") +
           "\" y1=\"" + detail::fmt(std::stod(cy) - 2.0, "%.2f") + "\" x2=\"" +
           detail::fmt(std::stod(cx) + 2.0, "%.2f") + "\" y2=\"" +
           detail::fmt(std::stod(cy) + 2.0, "%.2f") + "\"/>";
      s += "<line x1=\"" + detail::fmt(std::stod(cx) - 2.0, "%.2f") +
           "\" y1=\"" + detail::fmt(std::stod(cy) + 2.0, "%.2f") + "\" x2=\"" +
           detail::fmt(std::stod(cx) + 2.0, "%.2f") + "\" y2=\"" +
           detail::fmt(std::stod(cy) - 2.0, "%.2f") + "\"/>";
      s += "</g>\n";
    }
  }

  std::vector<Vec2> robot_pts;
  robot_pts.reserve(doc.samples.size());
  for (const TrajectorySample& smp : doc.samples)
    robot_pts.push_back(smp.robot.position());
  s += polyline(robot_pts, "#222222", "0.6");
  if (!robot_pts.empty()) {
    s += "<circle cx=\"" + X(robot_pts.front().x) + "\" cy=\"" +
         Y(robot_pts.front().y) +
         "\" r=\"1.5\" fill=\"none\" stroke=\"#222222\" "
         "stroke-width=\"0.5\"/>\n";
    s += "<circle cx=\"" + X(robot_pts.back().x) + "\" cy=\"" +
         Y(robot_pts.back().y) + "\" r=\"1.5\" fill=\"#222222\"/>\n";
  }

  std::string caption = doc.solution.empty() ? doc.outcome
                                             : doc.solution + ": " + doc.outcome;
  if (doc.completion_time_s)
    caption += " in " + detail::fmt(*doc.completion_time_s, "%.2f") + " s";
  s += "<text x=\"" + detail::fmt(margin, "%.2f") + "\" y=\"" +
       detail::fmt(margin - 1.5, "%.2f") + "\" font-size=\"4\">" + caption +
       "</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace beltbot
