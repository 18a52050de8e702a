#include "tcpnc/experiment.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace tcpnc {
namespace {

std::string_view axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::loss: return "loss";
    case SweepAxis::redundancy: return "redundancy";
    case SweepAxis::window: return "window";
    case SweepAxis::none: break;
  }
  return "single";
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string format_fixed(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

struct Task {
  std::size_t series;
  std::size_t point;
  unsigned iteration;
  SimConfig cfg;
};

}  // namespace

SimConfig with_axis_value(SimConfig cfg, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::loss:
      cfg.loss_rate = value;
      break;
    case SweepAxis::redundancy:
      cfg.redundancy = value;
      break;
    case SweepAxis::window:
      if (value != std::floor(value) || value < 1 || value > 255) {
        throw ConfigError("window values must be integers in [1, 255]");
      }
      cfg.window = static_cast<unsigned>(value);
      break;
    case SweepAxis::none:
      break;
  }
  return cfg;
}

SweepResult run_sweep(const SweepSpec& spec) {
  if (spec.iterations < 1) throw ConfigError("iterations must be at least 1");
  std::vector<double> points = spec.values;
  if (spec.axis == SweepAxis::none) {
    points = {0.0};
  } else if (points.empty()) {
    throw ConfigError("a sweep needs at least one value");
  }
  std::vector<Mode> modes = spec.compare ? std::vector<Mode>{Mode::tcp, Mode::tcpnc}
                                         : std::vector<Mode>{spec.base.mode};

  std::vector<Task> tasks;
  for (std::size_t s = 0; s < modes.size(); ++s) {
    for (std::size_t p = 0; p < points.size(); ++p) {
      for (unsigned it = 0; it < spec.iterations; ++it) {
        SimConfig cfg = with_axis_value(spec.base, spec.axis, points[p]);
        cfg.mode = modes[s];
        cfg.seed = spec.base.seed + it;
        cfg.validate();
        tasks.push_back(Task{s, p, it, cfg});
      }
    }
  }

  std::vector<SessionMetrics> metrics(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        metrics[i] = run_session(tasks[i].cfg);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(spec.jobs, 1, tasks.size());
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  SweepResult result;
  auto series_name = [&](std::size_t s) {
    std::string name(axis_name(spec.axis));
    if (spec.compare) name += "/" + std::string(to_string(modes[s]));
    return name;
  };
  auto point_name = [&](std::size_t p) {
    return spec.axis == SweepAxis::none ? std::string("-") : format_value(points[p]);
  };
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    result.runs.push_back(RunRecord{series_name(t.series), point_name(t.point), t.iteration, t.cfg.seed, metrics[i]});
  }
  for (std::size_t s = 0; s < modes.size(); ++s) {
    for (std::size_t p = 0; p < points.size(); ++p) {
      PointSummary sum{series_name(s), point_name(p), 0.0, 0, spec.iterations};
      double total = 0.0;
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].series != s || tasks[i].point != p || !metrics[i].completed) continue;
        total += metrics[i].goodput_bps;
        ++sum.completed;
      }
      sum.mean_goodput_bps = sum.completed ? total / sum.completed : 0.0;
      result.summaries.push_back(sum);
    }
  }
  return result;
}

void write_csv(std::ostream& out, const SweepSpec& spec, const SweepResult& result) {
  out << "axis,value,iteration,seed,goodput_bps,delivered_bytes,timeouts,visible_losses,completed\n";
  const bool aggregate = spec.axis != SweepAxis::none || spec.iterations > 1 || spec.compare;
  std::size_t r = 0;
  for (const auto& sum : result.summaries) {
    double bytes = 0, timeouts = 0, losses = 0;
    for (; r < result.runs.size() && result.runs[r].axis == sum.axis && result.runs[r].value == sum.value; ++r) {
      const auto& run = result.runs[r];
      const auto& m = run.metrics;
      out << run.axis << ',' << run.value << ',' << run.iteration << ',' << run.seed << ','
          << format_fixed(m.goodput_bps) << ',' << m.delivered_bytes << ',' << m.timeouts << ',' << m.visible_losses
          << ',' << (m.completed ? 1 : 0) << '\n';
      if (m.completed) {
        bytes += static_cast<double>(m.delivered_bytes);
        timeouts += static_cast<double>(m.timeouts);
        losses += static_cast<double>(m.visible_losses);
      }
    }
    if (!aggregate) continue;
    const double n = sum.completed ? sum.completed : 1;
    out << sum.axis << ',' << sum.value << ",mean," << spec.base.seed << ',' << format_fixed(sum.mean_goodput_bps)
        << ',' << format_fixed(bytes / n) << ',' << format_fixed(timeouts / n) << ',' << format_fixed(losses / n)
        << ',' << sum.completed << '/' << sum.iterations << '\n';
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Single-flow TCP and TCP/NC simulation experiments; writes CSV."};
  SimConfig base;
  std::string mode = "tcp";
  std::string sweep;
  std::vector<double> values;
  unsigned iterations = 0;
  bool compare = false;
  std::string out_path;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  app.add_option("--mode", mode, "tcp or tcpnc")->check(CLI::IsMember({"tcp", "tcpnc"}));
  app.add_option("--loss", base.loss_rate, "forward loss probability");
  app.add_option("--R", base.redundancy, "redundancy factor");
  app.add_option("--W", base.window, "coding window");
  app.add_option("--mss", base.mss, "maximum segment size, bytes");
  app.add_option("--rate", base.link_rate, "bottleneck rate, bits/s");
  app.add_option("--queue", base.bottleneck_queue, "bottleneck queue, packets");
  app.add_option("--delay", base.prop_delay, "one-way propagation delay, seconds");
  app.add_option("--duration", base.duration, "session length, seconds");
  app.add_option("--seed", base.seed, "base seed; iteration i uses seed + i");
  app.add_option("--iterations", iterations, "runs per point (default 4 for sweeps, 1 otherwise)");
  app.add_option("--sweep", sweep, "loss, redundancy or window")
      ->check(CLI::IsMember({"loss", "redundancy", "window"}));
  app.add_option("--values", values, "comma-separated sweep values")->delimiter(',');
  app.add_flag("--compare", compare, "run tcp and tcpnc at every point");
  app.add_option("--out", out_path, "write CSV here instead of stdout");
  app.add_option("--coding-packet-ns", base.coding_ns_per_packet, "coding CPU time per coded packet, ns");
  app.add_option("--coding-symbol-ns", base.coding_ns_per_symbol, "coding CPU time per GF(256) multiply, ns");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  SweepSpec spec;
  spec.base = base;
  spec.compare = compare;
  spec.jobs = jobs;
  if (sweep.empty() != values.empty()) {
    err << "error: --sweep and --values must be given together\n";
    return 2;
  }
  spec.axis = sweep == "loss"         ? SweepAxis::loss
              : sweep == "redundancy" ? SweepAxis::redundancy
              : sweep == "window"     ? SweepAxis::window
                                      : SweepAxis::none;
  spec.values = values;
  spec.iterations = iterations ? iterations : (spec.axis == SweepAxis::none ? 1 : 4);
  if (app.count("--iterations") && iterations == 0) {
    err << "error: --iterations must be at least 1\n";
    return 2;
  }

  SweepResult result;
  try {
    spec.base.mode = parse_mode(mode);
    result = run_sweep(spec);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  std::ostringstream csv;
  write_csv(csv, spec, result);
  if (out_path.empty()) {
    out << csv.str();
    return 0;
  }
  std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
  if (file) file << csv.str();
  if (!file) {
    err << "error: cannot write " << out_path << "\n";
    return 1;
  }
  return 0;
}

}  // namespace tcpnc
