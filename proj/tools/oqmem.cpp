#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "oqmem/scenario.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kSchema = 2, kNumeric = 3, kIo = 4 };

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return kOk;
  } catch (const oqmem::io::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kSchema;
  } catch (const oqmem::io::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const oqmem::DivergenceError& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    const auto& r = e.residuals();
    const std::size_t from = r.size() > 10 ? r.size() - 10 : 0;
    for (std::size_t i = from; i < r.size(); ++i)
      std::cerr << "  iteration " << i + 1 << " residual " << r[i] << "\n";
    return kNumeric;
  } catch (const oqmem::Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batch runner for scenario documents"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(oqmem::scenario::kVersion));

  std::string path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out = ".";

  auto* run = app.add_subcommand("run", "Run a scenario and write its outputs");
  run->add_option("scenario", path, "Scenario document")->required();
  run->add_option("--seed", seed, "Override the document seed");
  run->add_option("--threads", threads, "Worker threads (0 = all cores)");
  run->add_option("--out", out, "Output directory");

  auto* validate = app.add_subcommand("validate", "Check a scenario without running it");
  validate->add_option("scenario", path, "Scenario document")->required();

  std::string kind;
  auto* schema = app.add_subcommand("schema", "Print the document reference");
  schema->add_option("kind", kind, "Scenario kind");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*run) {
    return guarded([&] {
      const auto s = oqmem::scenario::load(path);
      const auto r = oqmem::scenario::run(s, {seed, threads, out});
      for (const auto& f : r.outputs) std::cout << f.string() << "\n";
      std::cout << r.manifest.string() << "\n";
    });
  }
  if (*validate) {
    return guarded([&] {
      const auto s = oqmem::scenario::load(path);
      std::cout << path << ": ok (" << oqmem::scenario::kind_name(s.kind) << ")\n";
    });
  }
  if (kind.empty()) {
    std::cout << oqmem::scenario::schema_text();
    return kOk;
  }
  const auto k = oqmem::scenario::parse_kind(kind);
  if (!k) {
    std::cerr << "unknown kind '" << kind << "'\n";
    return kSchema;
  }
  std::cout << oqmem::scenario::schema_text(*k);
  return kOk;
}
