#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "nlirf/nlirf.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> criterion;
  std::optional<std::string> window;
  std::optional<std::string> out;
  std::optional<std::string> penalty;
  std::optional<std::string> cluster;
};

nlirf::PipelineConfig resolve(const Overrides& o) {
  auto c = nlirf::PipelineConfig::load(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.criterion) c.criterion = nlirf::PipelineConfig::parse_criterion(*o.criterion);
  if (o.window) c.window = nlirf::MonthRange::parse(*o.window);
  if (o.out) c.out = *o.out;
  if (o.penalty) c.penalty = nlirf::PipelineConfig::parse_penalty(*o.penalty);
  if (o.cluster) c.cluster = nlirf::PipelineConfig::parse_cluster(*o.cluster);
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear and non-linear panel local projections for monetary-policy shocks"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config, "JSON run configuration")->required();
  app.add_option("--seed", o.seed, "Seed for rotation draws, bootstrap and simulation");
  app.add_option("--criterion", o.criterion, "Lag selection criterion")->check(CLI::IsMember({"aic", "bic"}));
  app.add_option("--window", o.window, "Sample window YYYY-MM:YYYY-MM");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--penalty", o.penalty, "Parameter count in the criterion")->check(CLI::IsMember({"paper", "coefficients"}));
  app.add_option("--cluster", o.cluster, "Cluster dimension for standard errors")->check(CLI::IsMember({"country", "month"}));

  using Stage = nlirf::StageReport (*)(const nlirf::PipelineConfig&);
  const std::pair<const char*, Stage> stages[] = {
      {"identify", nlirf::run_identify}, {"estimate", nlirf::run_estimate}, {"infer", nlirf::run_infer},
      {"symmetry", nlirf::run_symmetry}, {"simulate", nlirf::run_simulate}, {"run-all", nlirf::run_all}};
  const char* help[] = {"Identify shocks from surprises, or pass monthly shocks through",
                        "Select lag orders and fit linear, sign and size projections",
                        "Wald tests and significance tables",
                        "Summary statistics and symmetry tests of the shocks",
                        "Simulate a panel from a structural model plus oracle responses",
                        "Every stage in order"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(stages); ++i) subs.push_back(app.add_subcommand(stages[i].first, help[i]));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto cfg = resolve(o);
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      const auto rep = stages[i].second(cfg);
      for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
      for (const auto& p : rep.written) std::cout << p.string() << '\n';
    }
  } catch (const nlirf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const nlirf::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const nlirf::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
