// Command-line front end: finaliter <command> [--config FILE] [options].
// Values from --config are read first; flags given on the command line override them.

#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "finaliter/experiment.hpp"

namespace {

struct FlagSpec {
  const char* key;
  const char* help;
};

// Flags shared by every subcommand, then the per-command ones.
constexpr FlagSpec kCommon[] = {
    {"out", "output path (stdout when omitted)"},
    {"format", "csv or json"},
    {"seed", "random seed (default 0)"},
    {"jobs", "worker threads (default: FINALITER_JOBS, then hardware concurrency)"},
};

const std::map<std::string, std::vector<FlagSpec>>& command_flags() {
  static const FlagSpec family{"family", "sc, lip-dec, lip-fixed or all; comma-separated"};
  static const FlagSpec d{"d", "dimension, or a list like 1,2,4,...,64"};
  static const FlagSpec T{"T", "horizon, or a list"};
  static const FlagSpec tol{"tol", "trajectory tolerance (default 1e-9)"};
  static const std::map<std::string, std::vector<FlagSpec>> table{
      {"lowerbound", {family, d, T}},
      {"verify", {family, d, T, tol}},
      {"certify", {family, d, T, {"samples", "sampled pairs per check (default 10000)"}}},
      {"sweep",
       {family, d, T, tol, {"curve", "also write a bound-vs-x curve CSV here"}, {"x_axis", "curve x axis: d or T"}}},
      {"walk",
       {{"n", "grid size; the horizon is T = n^2"},
        {"profile", "identity, linear, gentle, quadratic, cubic, three-halves, huber, kinked, softplus"},
        {"method", "closed_form, linear_solve or power_iteration"}}},
      {"mc",
       {{"shape", "abs, asym_abs or piecewise"},
        {"slope_ratio", "asym_abs: |left slope| / right slope"},
        {"knots", "piecewise: comma-separated knots"},
        {"slopes", "piecewise: comma-separated slopes"},
        {"D", "domain diameter"},
        {"G", "oracle bound"},
        {"epsilon", "slope scale"},
        {"c", "slope band ratio"},
        T,
        {"trials", "number of paths"},
        {"x0", "start point, or 'uniform'"}}},
  };
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace finaliter;

  CLI::App app{"Final-iterate SGD experiments"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "expand help for every subcommand");

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::string> config_paths;
  std::vector<std::pair<std::string, CLI::App*>> subs;

  for (const auto& [name, flags] : command_flags()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_paths[name], "flat key=value config file");
    auto& slot = values[name];
    for (const auto& f : kCommon) sub->add_option(std::string("--") + f.key, slot[f.key], f.help);
    for (const auto& f : flags) sub->add_option(std::string("--") + f.key, slot[f.key], f.help);
    subs.emplace_back(name, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitStatus::UsageError);
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    try {
      std::map<std::string, std::string> merged;
      if (!config_paths[name].empty()) merged = read_config_file(config_paths[name]);
      if (auto it = merged.find("command"); it != merged.end() && it->second != name) {
        throw UsageError("config file is for '" + it->second + "', not '" + name + "'");
      }
      merged["command"] = name;
      for (const auto& [key, value] : values[name]) {
        if (sub->count("--" + key) > 0) merged[key] = value;
      }
      return run_experiment(config_from_map(merged));
    } catch (const UsageError& e) {
      std::cerr << "usage error: " << e.what() << '\n';
      return static_cast<int>(ExitStatus::UsageError);
    } catch (const IoError& e) {
      std::cerr << "i/o error: " << e.what() << '\n';
      return static_cast<int>(ExitStatus::IoError);
    }
  }
  return static_cast<int>(ExitStatus::UsageError);
}
