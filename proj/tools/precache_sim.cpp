#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "precache/fuzz.hpp"
#include "precache/harness.hpp"

using namespace precache;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

int cmd_run(const std::string& config, const std::string& program_path, const std::string& out) {
  SimConfig cfg = parse_config(slurp(config));
  Program program = assemble(slurp(program_path));
  RunOutput r = run_program(cfg, program);
  write_outputs(out, r);
  std::cout << stats_csv_header() << '\n' << stats_csv_row(r.result.stats) << '\n';
  if (r.result.stats.max_cycles_exceeded) {
    std::cerr << "max cycles exceeded\n";
    return 1;
  }
  if (!r.result.violations.empty()) {
    std::cerr << r.result.violations.size() << " invariant violations, first: " << r.result.violations.front() << '\n';
    return 1;
  }
  return 0;
}

int cmd_attack(const std::string& name, const std::string& mode_text, const std::string& out) {
  std::vector<Mode> modes;
  if (mode_text == "both")
    modes = {Mode::Baseline, Mode::PreCache};
  else
    modes = {parse_mode(mode_text)};
  int rc = 0;
  for (Mode m : modes) {
    auto t0 = std::chrono::steady_clock::now();
    AttackReport rep = run_attack(name, m);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << rep.summary() << "; " << secs << " s\n";
    if (!out.empty()) {
      for (const AttackRun& r : rep.runs) {
        std::filesystem::create_directories(out);
        std::ofstream f(std::filesystem::path(out) /
                        (name + "_" + to_string(m) + "_" + std::to_string(r.secret) + ".dump"));
        f << r.dump.text();
      }
    }
    bool expected = m == Mode::Baseline ? rep.secret_observable : !rep.secret_observable;
    if (rep.inconclusive || !expected) rc = 1;
  }
  return rc;
}

int cmd_compare(const std::string& a, const std::string& b) {
  auto rep = compare_runs(load_run_dir(a), load_run_dir(b));
  if (rep.equal) {
    std::cout << "equivalent\n";
    return 0;
  }
  std::cout << "diverged: " << rep.first_divergence << '\n';
  return 1;
}

int cmd_fuzz(std::uint64_t seed, unsigned count, unsigned cores) {
  FuzzOptions opt;
  opt.seed = seed;
  opt.count = count;
  opt.cores = cores;
  FuzzSummary s = fuzz(opt);
  std::cout << s.text() << '\n';
  if (s.failure) std::cerr << "reproducer: " << *s.failure << '\n';
  return s.ok() ? 0 : 1;
}

int cmd_dump(const std::string& checkpoint) {
  CacheDump d = checkpoint_from_json(slurp(checkpoint));
  std::cout << d.text();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cycle-level simulator of an out-of-order multicore with a speculative-load quarantine buffer"};
  app.require_subcommand(1);

  std::string config, program, out;
  auto* run = app.add_subcommand("run", "Run a program and write stats, traces and a cache dump");
  run->add_option("--config", config, "key = value config file")->required()->check(CLI::ExistingFile);
  run->add_option("--program", program, ".pasm program")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory")->required();

  std::string name, mode = "both", dump_dir;
  auto* attack = app.add_subcommand("attack", "Run a built-in attack gadget with two secrets and diff the dumps");
  attack->add_option("--name", name, "gadget")->required()->check(CLI::IsMember(attack_names()));
  attack->add_option("--mode", mode, "baseline, precache or both")->check(CLI::IsMember({"baseline", "precache", "both"}));
  attack->add_option("--out", dump_dir, "directory for the dumps");

  std::string dir_a, dir_b;
  auto* compare = app.add_subcommand("compare", "Compare two run output directories");
  compare->add_option("A", dir_a)->required()->check(CLI::ExistingDirectory);
  compare->add_option("B", dir_b)->required()->check(CLI::ExistingDirectory);

  std::uint64_t seed = 1;
  unsigned count = 100, cores = 1;
  auto* fz = app.add_subcommand("fuzz", "Random programs: baseline vs precache vs interpreter");
  fz->add_option("--seed", seed);
  fz->add_option("--count", count)->check(CLI::PositiveNumber);
  fz->add_option("--cores", cores)->check(CLI::IsMember({1, 2, 4}));

  std::string checkpoint;
  auto* dump = app.add_subcommand("dump", "Print the cache dump stored in a checkpoint");
  dump->add_option("--checkpoint", checkpoint, "checkpoint.json written by run")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config, program, out);
    if (*attack) return cmd_attack(name, mode, dump_dir);
    if (*compare) return cmd_compare(dir_a, dir_b);
    if (*fz) return cmd_fuzz(seed, count, cores);
    if (*dump) return cmd_dump(checkpoint);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
