// csb command-line tool.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "csb/config.hpp"
#include "csb/errors.hpp"
#include "csb/run.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kStrict = 4 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contracting-sphere blow-up construction and evolution for the 3D cubic NLS"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  bool strict = false;
  const auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides CSB_OUTPUT_DIR and output_dir)");
    sub->add_flag("--strict", strict, "report: exit 4 when a gated check fails");
    return sub;
  };
  auto* construct = add("construct", "build the expansion and write coefficients, fields and residuals");
  auto* evolve = add("evolve", "evolve from the approximate solution and write the trajectory");
  auto* compare = add("compare", "compare the trajectory with the approximate solution");
  auto* report = add("report", "compare, fit rates, run the checks and write plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    const csb::RunConfig c = csb::load_config(config_path);
    std::filesystem::path out = c.output_dir;
    if (const char* env = std::getenv("CSB_OUTPUT_DIR"); env && *env) out = env;
    if (!out_dir.empty()) out = out_dir;
    std::filesystem::create_directories(out);

    if (construct->parsed()) {
      csb::cmd_construct(c, out, std::cerr);
    } else if (evolve->parsed()) {
      csb::cmd_evolve(c, out, std::cerr);
    } else if (compare->parsed()) {
      csb::cmd_compare(c, out, std::cerr);
    } else if (report->parsed()) {
      const auto r = csb::cmd_report(c, out, std::cerr);
      if (strict && !r.all_gated_pass) return kStrict;
    }
    return kOk;
  } catch (const csb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const csb::MissingInput& e) {
    std::cerr << "missing input: " << e.what() << '\n';
    return kConfig;
  } catch (const csb::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kConfig;
  } catch (const csb::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "file error: " << e.what() << '\n';
    return kConfig;
  }
}
