#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lowrank/adapters.hpp"
#include "lowrank/als.hpp"
#include "lowrank/csv_io.hpp"
#include "lowrank/hadamard.hpp"
#include "lowrank/khatri_rao.hpp"
#include "lowrank/kronecker.hpp"
#include "lowrank/matops.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace lowrank;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitIterationCap = 2;

struct Options {
  std::string input;
  std::string outDir;
  int rank = 1;
  double lambdaW = 0.0;
  double lambdaZ = 0.0;
  double step = 1e-2;
  double tol = 1e-8;
  int maxIters = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string blocking;     // "m1xm2,n1xn2"
  std::string factorRows;   // "r1,r2,..."
  std::string adapterKind = "lora";
  double alpha = 1.0;
  bool staleDelta = false;
  bool wallClock = false;
};

FitConfig toConfig(const Options& o) {
  FitConfig cfg;
  cfg.rank = o.rank;
  cfg.lambdaW = o.lambdaW;
  cfg.lambdaZ = o.lambdaZ;
  cfg.step = o.step;
  cfg.tol = o.tol;
  cfg.maxIters = o.maxIters;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  return cfg;
}

std::vector<Index> parseIndexList(const std::string& text, const char* flag) {
  std::vector<Index> out;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const std::size_t comma = text.find(',', begin);
    const std::string tok = text.substr(begin, comma == std::string::npos ? std::string::npos : comma - begin);
    try {
      std::size_t used = 0;
      const long v = std::stol(tok, &used);
      if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
      out.push_back(static_cast<Index>(v));
    } catch (const std::exception&) {
      throw Error(std::string(flag) + ": expected positive integers, got '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  return out;
}

kronecker::Blocking parseBlocking(const std::string& text, Index rows, Index cols) {
  const auto bad = [&] { return Error("--blocking: expected m1xm2,n1xn2, got '" + text + "'"); };
  const std::size_t comma = text.find(',');
  if (comma == std::string::npos) throw bad();
  const auto parsePair = [&](const std::string& part, Index& a, Index& b) {
    const std::size_t x = part.find('x');
    if (x == std::string::npos) throw bad();
    try {
      a = static_cast<Index>(std::stol(part.substr(0, x)));
      b = static_cast<Index>(std::stol(part.substr(x + 1)));
    } catch (const std::exception&) {
      throw bad();
    }
  };
  kronecker::Blocking s{};
  parsePair(text.substr(0, comma), s.m1, s.m2);
  parsePair(text.substr(comma + 1), s.n1, s.n2);
  kronecker::checkBlocking(s, rows, cols);
  return s;
}

void writeTrace(const fs::path& path, const ConvergenceTrace& trace, bool wallClock) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  const auto line = [&](int iter, double loss, double elapsed) {
    out << json{{"iter", iter}, {"loss", loss}, {"elapsed_s", wallClock ? elapsed : 0.0}}.dump()
        << '\n';
  };
  line(0, trace.initialLoss, 0.0);
  for (const auto& r : trace.records) line(r.iter, r.loss, r.elapsedSeconds);
}

void writeManifest(const fs::path& path, const json& manifest) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << manifest.dump(2) << '\n';
}

json baseManifest(const std::string& subcommand, const Options& o) {
  json m;
  m["subcommand"] = subcommand;
  m["input"] = o.input;
  m["seed"] = o.seed;
  m["threads"] = o.threads;
  return m;
}

int finishRun(const Options& o, const ConvergenceTrace& trace,
              const std::string& lossQuantity, json manifest) {
  manifest["loss_quantity"] = lossQuantity;
  manifest["result"] = {{"stop_reason", toString(trace.stopReason)},
                        {"final_loss", trace.finalLoss()},
                        {"iterations", trace.records.size()}};
  const fs::path out(o.outDir);
  writeTrace(out / "trace.jsonl", trace, o.wallClock);
  writeManifest(out / "manifest.json", manifest);
  return trace.stopReason == StopReason::ToleranceMet ? kExitOk : kExitIterationCap;
}

void saveFactor(const fs::path& dir, const std::string& name, const Matrix& f) {
  saveMatrixCsv((dir / (name + ".csv")).string(), f);
}

int runAls(const Options& o) {
  const CsvMatrix in = loadMatrixCsv(o.input);
  if (!in.fullyObserved())
    throw PreconditionViolation("als: input has missing entries; use als-masked");
  const FitConfig cfg = toConfig(o);
  json manifest = baseManifest("als", o);
  manifest["rank"] = o.rank;
  manifest["lambda_w"] = o.lambdaW;
  manifest["lambda_z"] = o.lambdaZ;
  manifest["tol"] = o.tol;
  manifest["max_iters"] = o.maxIters;

  const bool regularized = o.lambdaW != 0.0 || o.lambdaZ != 0.0;
  als::Factors init =
      als::randomFactors(in.values.rows(), in.values.cols(), cfg, !regularized);
  als::Result res = regularized ? als::fitRegularized(in.values, cfg, std::move(init))
                                : als::fitPlain(in.values, cfg, std::move(init));
  const fs::path factors = fs::path(o.outDir) / "factors";
  saveFactor(factors, "W", res.factors.W);
  saveFactor(factors, "Z", res.factors.Z);
  return finishRun(o, res.trace, "frobenius_norm", std::move(manifest));
}

int runAlsMasked(const Options& o) {
  const CsvMatrix in = loadMatrixCsv(o.input);
  const FitConfig cfg = toConfig(o);
  json manifest = baseManifest("als-masked", o);
  manifest["rank"] = o.rank;
  manifest["lambda_w"] = o.lambdaW;
  manifest["lambda_z"] = o.lambdaZ;
  manifest["tol"] = o.tol;
  manifest["max_iters"] = o.maxIters;

  als::Factors init = als::randomFactors(in.values.rows(), in.values.cols(), cfg);
  als::Result res = als::fitMasked(in.values, in.mask, cfg, std::move(init));
  const fs::path factors = fs::path(o.outDir) / "factors";
  saveFactor(factors, "W", res.factors.W);
  saveFactor(factors, "Z", res.factors.Z);
  return finishRun(o, res.trace, "masked_squared_frobenius",
                   std::move(manifest));
}

int runHadamard(const Options& o) {
  const CsvMatrix in = loadMatrixCsv(o.input);
  const FitConfig cfg = toConfig(o);
  json manifest = baseManifest("hadamard", o);
  manifest["rank"] = o.rank;
  manifest["lambda_w"] = o.lambdaW;
  manifest["lambda_z"] = o.lambdaZ;
  manifest["step"] = o.step;
  manifest["tol"] = o.tol;
  manifest["max_iters"] = o.maxIters;
  manifest["stale_delta"] = o.staleDelta;

  hadamard::Factors init =
      hadamard::randomFactors(in.values.rows(), in.values.cols(), cfg);
  const bool masked = !in.fullyObserved();
  hadamard::Result res =
      masked ? hadamard::fitMasked(in.values, in.mask, cfg, std::move(init))
             : hadamard::fit(in.values, cfg, std::move(init),
                             o.staleDelta ? hadamard::DeltaMode::StalePerIter
                                          : hadamard::DeltaMode::Recompute);
  const fs::path factors = fs::path(o.outDir) / "factors";
  saveFactor(factors, "C1", res.factors.C1);
  saveFactor(factors, "D1", res.factors.D1);
  saveFactor(factors, "C2", res.factors.C2);
  saveFactor(factors, "D2", res.factors.D2);
  return finishRun(o, res.trace,
                   masked ? "masked_squared_frobenius" : "squared_frobenius",
                   std::move(manifest));
}

int runKron(const Options& o) {
  const CsvMatrix in = loadMatrixCsv(o.input);
  const kronecker::Blocking s = parseBlocking(o.blocking, in.values.rows(), in.values.cols());
  const FitConfig cfg = toConfig(o);
  json manifest = baseManifest("kron", o);
  manifest["blocking"] = o.blocking;
  manifest["tol"] = o.tol;
  manifest["max_iters"] = o.maxIters;

  const bool masked = !in.fullyObserved();
  kronecker::Factors init = kronecker::randomFactors(s, cfg);
  kronecker::Result res = kronecker::fit(in.values, s, cfg, std::move(init),
                                         masked ? &in.mask : nullptr);
  const fs::path factors = fs::path(o.outDir) / "factors";
  saveFactor(factors, "B", res.factors.B);
  saveFactor(factors, "C", res.factors.C);
  return finishRun(o, res.trace,
                   masked ? "masked_squared_frobenius" : "squared_frobenius",
                   std::move(manifest));
}

int runKhatri(const Options& o, bool cascade) {
  const CsvMatrix in = loadMatrixCsv(o.input);
  const std::vector<Index> rows = parseIndexList(o.factorRows, "--factor-rows");
  if (!cascade && rows.size() != 2)
    throw Error("khatri: --factor-rows must name exactly two factors");
  const FitConfig cfg = toConfig(o);
  json manifest = baseManifest(cascade ? "cascade" : "khatri", o);
  manifest["factor_rows"] = o.factorRows;
  manifest["tol"] = o.tol;
  manifest["max_iters"] = o.maxIters;

  const bool masked = !in.fullyObserved();
  khatri_rao::FactorList init = khatri_rao::randomFactors(rows, in.values.cols(), cfg);
  khatri_rao::Result res =
      cascade ? khatri_rao::fitCascade(in.values, cfg, std::move(init),
                                       masked ? &in.mask : nullptr)
              : khatri_rao::fitPair(in.values, cfg, std::move(init),
                                    masked ? &in.mask : nullptr);
  const fs::path factors = fs::path(o.outDir) / "factors";
  for (std::size_t t = 0; t < res.factors.size(); ++t)
    saveFactor(factors, "factor_" + std::to_string(t), res.factors[t]);
  return finishRun(o, res.trace,
                   masked ? "masked_squared_frobenius" : "squared_frobenius",
                   std::move(manifest));
}

int runAdapterAudit(const Options& o) {
  const CsvMatrix in = loadMatrixCsv(o.input);
  if (!in.fullyObserved())
    throw PreconditionViolation("adapter-audit: base weights must be fully observed");
  const adapters::Kind kind = adapters::kindFromString(o.adapterKind);

  adapters::Shapes shapes;
  shapes.rank = o.rank;
  if (kind == adapters::Kind::LoKr || kind == adapters::Kind::LoKrFactored) {
    const kronecker::Blocking s =
        parseBlocking(o.blocking, in.values.rows(), in.values.cols());
    shapes.m1 = s.m1;
    shapes.n1 = s.n1;
  }
  if (kind == adapters::Kind::LoKH)
    shapes.rows = parseIndexList(o.factorRows, "--factor-rows");

  const Vector bias = Vector::Zero(in.values.rows());
  const adapters::Spec spec =
      adapters::makeRandom(kind, in.values, bias, o.alpha, shapes, o.seed);
  const adapters::Report rep = adapters::audit(spec);

  json out;
  out["kind"] = adapters::toString(kind);
  out["base_shape"] = {in.values.rows(), in.values.cols()};
  out["alpha"] = o.alpha;
  out["trainable_params"] = rep.trainableParams;
  out["rank_upper_bound"] = rep.rankUpperBound;
  if (rep.kRankLowerBound) out["k_rank_lower_bound"] = *rep.kRankLowerBound;
  if (rep.rankLowerBound) out["rank_lower_bound"] = *rep.rankLowerBound;
  if (rep.measuredRank) out["measured_rank"] = *rep.measuredRank;

  json manifest = baseManifest("adapter-audit", o);
  manifest["adapter_kind"] = o.adapterKind;
  manifest["alpha"] = o.alpha;
  manifest["rank"] = o.rank;
  if (!o.blocking.empty()) manifest["blocking"] = o.blocking;
  if (!o.factorRows.empty()) manifest["factor_rows"] = o.factorRows;

  const fs::path dir(o.outDir);
  const fs::path factors = dir / "factors";
  for (std::size_t t = 0; t < spec.factors.size(); ++t)
    saveFactor(factors, "factor_" + std::to_string(t), spec.factors[t]);
  std::ofstream rout(dir / "report.json");
  if (!rout) throw Error("cannot write report.json");
  rout << out.dump(2) << '\n';
  writeManifest(dir / "manifest.json", manifest);
  std::cout << out.dump(2) << std::endl;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured low-rank decompositions: ALS, Hadamard, Kronecker and "
               "Khatri-Rao solvers plus adapter audits"};
  app.require_subcommand(1);

  Options o;
  const auto addCommon = [&](CLI::App* cmd, bool needsInput = true) {
    if (needsInput)
      cmd->add_option("input", o.input, "input matrix CSV (empty/NaN cells are missing)")
          ->required();
    cmd->add_option("--out", o.outDir, "output directory")->required();
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--threads", o.threads, "worker threads for independent sub-solves");
    cmd->add_flag("--wall-clock", o.wallClock,
                  "write measured wall time into trace.jsonl (off by default so "
                  "identical runs are byte-identical)");
  };
  const auto addFit = [&](CLI::App* cmd) {
    cmd->add_option("--tol", o.tol, "stopping threshold on the native loss");
    cmd->add_option("--max-iters", o.maxIters, "iteration cap");
  };

  CLI::App* als = app.add_subcommand("als", "alternating least squares (plain or ridge-regularized)");
  addCommon(als);
  addFit(als);
  als->add_option("--rank", o.rank, "target rank K");
  als->add_option("--lambda-w", o.lambdaW, "ridge weight on W (0 = plain ALS)");
  als->add_option("--lambda-z", o.lambdaZ, "ridge weight on Z (0 = plain ALS)");

  CLI::App* alsMasked = app.add_subcommand("als-masked", "matrix completion by masked ALS");
  addCommon(alsMasked);
  addFit(alsMasked);
  alsMasked->add_option("--rank", o.rank, "target rank K");
  alsMasked->add_option("--lambda-w", o.lambdaW, "ridge weight on W")->required();
  alsMasked->add_option("--lambda-z", o.lambdaZ, "ridge weight on Z")->required();

  CLI::App* hada = app.add_subcommand("hadamard", "low-rank Hadamard decomposition by alternating gradient descent");
  addCommon(hada);
  addFit(hada);
  hada->add_option("--rank", o.rank, "rank K of each of the two products");
  hada->add_option("--step", o.step, "gradient step size");
  hada->add_option("--lambda-w", o.lambdaW, "optional ridge on C1/C2");
  hada->add_option("--lambda-z", o.lambdaZ, "optional ridge on D1/D2");
  hada->add_flag("--stale-delta", o.staleDelta,
                 "reuse one residual for all four factor steps per iteration");

  CLI::App* kron = app.add_subcommand("kron", "low-rank Kronecker decomposition (closed-form alternation)");
  addCommon(kron);
  addFit(kron);
  kron->add_option("--blocking", o.blocking, "uniform blocking m1xm2,n1xn2")->required();

  CLI::App* khatri = app.add_subcommand("khatri", "two-factor Khatri-Rao decomposition");
  addCommon(khatri);
  addFit(khatri);
  khatri->add_option("--factor-rows", o.factorRows, "row counts r1,r2 (product = matrix rows)")
      ->required();

  CLI::App* cascade = app.add_subcommand("cascade", "cascaded Khatri-Rao decomposition (k factors)");
  addCommon(cascade);
  addFit(cascade);
  cascade->add_option("--factor-rows", o.factorRows, "row counts r1,...,rk")->required();

  CLI::App* audit = app.add_subcommand("adapter-audit",
                                       "construct a seeded adapter over base weights and report "
                                       "parameter counts and rank capacity as JSON");
  addCommon(audit);
  audit->add_option("--adapter-kind", o.adapterKind,
                    "lora | loha | lokr | lokr-factored | lokh");
  audit->add_option("--rank", o.rank, "r (lora), r-bar (loha) or inner rank k (lokr-factored)");
  audit->add_option("--alpha", o.alpha, "merging ratio");
  audit->add_option("--blocking", o.blocking, "lokr blocking m1xm2,n1xn2");
  audit->add_option("--factor-rows", o.factorRows, "lokh factor row counts");

  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(fs::path(o.outDir) / "factors");
    if (als->parsed()) return runAls(o);
    if (alsMasked->parsed()) return runAlsMasked(o);
    if (hada->parsed()) return runHadamard(o);
    if (kron->parsed()) return runKron(o);
    if (khatri->parsed()) return runKhatri(o, false);
    if (cascade->parsed()) return runKhatri(o, true);
    if (audit->parsed()) return runAdapterAudit(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
