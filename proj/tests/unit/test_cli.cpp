// Copyright 2026 The disco Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end checks of the `disco` binary. The executable path comes in via
// DISCO_CLI_PATH from the build; every invocation runs through the shell with
// captured stdout/stderr.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "disco/datagen/datagen.hpp"

using nlohmann::json;

namespace {

struct RunResult {
  int status = -1;
  std::string out, err;
};

std::string slurp_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<char> slurp_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<char>(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
}

const std::filesystem::path& work_dir() {
  static const std::filesystem::path dir = [] {
    const auto d = std::filesystem::temp_directory_path() / "disco_cli_work";
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

RunResult run_cli(const std::string& arguments) {
  static int counter = 0;
  const auto out_file =
      work_dir() / ("stdout." + std::to_string(counter) + ".txt");
  const auto err_file =
      work_dir() / ("stderr." + std::to_string(counter) + ".txt");
  ++counter;

  const std::string cmd = std::string(DISCO_CLI_PATH) + " " + arguments +
                          " > " + out_file.string() + " 2> " +
                          err_file.string();
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp_text(out_file);
  r.err = slurp_text(err_file);
  return r;
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << doc.dump(2) << "\n";
}

json gen_config(int count, std::uint64_t seed, bool validation = false) {
  return {{"domain", "cars"},     {"count", count},
          {"imageSize", 32},      {"channels", 1},
          {"bins", 24},           {"seed", seed},
          {"validation", validation}};
}

// Datasets shared by the pipeline tests, generated through the CLI once.
const std::string& train_dataset() {
  static const std::string dir = [] {
    const auto cfg = work_dir() / "gen_train.json";
    write_json(cfg, gen_config(12, 902));
    const auto out = work_dir() / "train_ds";
    const RunResult r =
        run_cli("gen --config " + cfg.string() + " --out " + out.string());
    REQUIRE(r.status == 0);
    return out.string();
  }();
  return dir;
}

const std::string& val_dataset() {
  static const std::string dir = [] {
    const auto cfg = work_dir() / "gen_val.json";
    write_json(cfg, gen_config(12, 903, true));
    const auto out = work_dir() / "val_ds";
    const RunResult r =
        run_cli("gen --config " + cfg.string() + " --out " + out.string());
    REQUIRE(r.status == 0);
    return out.string();
  }();
  return dir;
}

json train_section() {
  return {{"batch", 6},        {"batchMix", {3, 1, 2}}, {"maxEpochs", 2},
          {"lr0", 0.01},       {"seed", 5}};
}

// One small training run reused by the eval and plot tests.
const std::string& trained_dir() {
  static const std::string dir = [] {
    const auto cfg = work_dir() / "train.json";
    write_json(cfg, json{{"variant", "disco"},
                         {"train", train_section()},
                         {"trainData", train_dataset()},
                         {"valData", val_dataset()},
                         {"initSeed", 3}});
    const auto out = work_dir() / "run";
    const RunResult r =
        run_cli("train --config " + cfg.string() + " --out " + out.string());
    REQUIRE(r.status == 0);
    return out.string();
  }();
  return dir;
}

// The strongest self-check available: predictions copied from the ground
// truth must score perfectly.
const std::string& perfect_predictions() {
  static const std::string path = [] {
    const disco::datagen::DatasetReader reader(val_dataset());
    const auto& m = reader.manifest();
    json samples = json::array();
    for (std::int64_t i = 0; i < m.record_count(); ++i) {
      const disco::datagen::RenderedSample s = reader.read(i);
      json rec;
      rec["pose"] = s.pose_onehot;
      rec["visibility"] = s.visibility;
      rec["keypoints3d"] = s.keypoints_3d;
      rec["keypoints2d"] = s.keypoints_2d;
      samples.push_back(std::move(rec));
    }
    const json doc{{"count", m.record_count()}, {"bins", m.bins},
                   {"keypoints", m.keypoints},  {"width", m.width},
                   {"height", m.height},        {"samples", samples}};
    const auto p = work_dir() / "perfect.json";
    write_json(p, doc);
    return p.string();
  }();
  return path;
}

double metric_value(const json& report, const std::string& name) {
  for (const auto& entry : report) {
    if (entry.at("metric") == name) return entry.at("value").get<double>();
  }
  FAIL("metric " << name << " missing from report");
  return -1.0;
}

bool has_metric(const json& report, const std::string& name) {
  for (const auto& entry : report)
    if (entry.at("metric") == name) return true;
  return false;
}

std::vector<std::vector<std::string>> read_csv_rows(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

TEST_CASE("gen is reproducible and --seed overrides the config") {
  const auto cfg = work_dir() / "gen_repro.json";
  write_json(cfg, gen_config(12, 900));

  const auto a = work_dir() / "repro_a";
  const auto b = work_dir() / "repro_b";
  const RunResult ra =
      run_cli("gen --config " + cfg.string() + " --out " + a.string());
  REQUIRE(ra.status == 0);
  const json doc = json::parse(ra.out);
  CHECK(doc.at("command") == "gen");
  CHECK(doc.at("records").get<int>() == 12);
  CHECK(doc.at("classCounts") == json({7, 2, 3}));

  const RunResult rb =
      run_cli("gen --config " + cfg.string() + " --out " + b.string());
  REQUIRE(rb.status == 0);
  CHECK(slurp_bytes(a / "samples.dsc") == slurp_bytes(b / "samples.dsc"));
  CHECK(slurp_bytes(a / "manifest.json") == slurp_bytes(b / "manifest.json"));

  const auto c = work_dir() / "repro_c";
  const RunResult rc = run_cli("gen --config " + cfg.string() + " --seed 901" +
                               " --out " + c.string());
  REQUIRE(rc.status == 0);
  CHECK(slurp_bytes(a / "samples.dsc") != slurp_bytes(c / "samples.dsc"));

  // The effective config lands next to the data, with the override applied.
  const json saved = json::parse(slurp_text(c / "gen_config.json"));
  CHECK(saved.at("seed").get<std::uint64_t>() == 901);
}

TEST_CASE("gen handles an empty dataset") {
  const auto cfg = work_dir() / "gen_zero.json";
  write_json(cfg, gen_config(0, 1));
  const auto out = work_dir() / "zero_ds";
  const RunResult r =
      run_cli("gen --config " + cfg.string() + " --out " + out.string());
  REQUIRE(r.status == 0);
  CHECK(json::parse(r.out).at("records").get<int>() == 0);
  const disco::datagen::DatasetManifest m =
      disco::datagen::load_manifest(out.string());
  CHECK(m.record_count() == 0);
}

TEST_CASE("unknown config keys and unknown variants fail loudly") {
  const auto cfg = work_dir() / "gen_bad.json";
  json doc = gen_config(2, 1);
  doc["sneaky"] = 1;
  write_json(cfg, doc);
  const RunResult r = run_cli("gen --config " + cfg.string() + " --out " +
                              (work_dir() / "bad_ds").string());
  CHECK(r.status == 1);
  const json err = json::parse(r.err);
  CHECK(err.at("error").at("code") == "ConfigError");

  const auto tcfg = work_dir() / "train_bad.json";
  write_json(tcfg, json{{"variant", "disco-typo"},
                        {"train", train_section()},
                        {"trainData", train_dataset()},
                        {"valData", val_dataset()}});
  const RunResult rt = run_cli("train --config " + tcfg.string() + " --out " +
                               (work_dir() / "bad_run").string());
  CHECK(rt.status == 1);
  CHECK(json::parse(rt.err).at("error").at("code") == "ConfigError");
}

TEST_CASE("train writes checkpoints, a log, and a faithful summary") {
  const std::string& dir = trained_dir();

  const json result = json::parse(slurp_text(dir + "/result.json"));
  CHECK(result.at("command") == "train");
  CHECK(result.at("variant") == "disco");
  CHECK(result.at("epochs").get<int>() == 2);
  CHECK(result.at("steps").get<int>() == 2);  // pools 7/2/3, mix 3/1/2
  CHECK_FALSE(result.at("interrupted").get<bool>());
  CHECK(result.at("bestValLoss").get<double>() > 0.0);
  CHECK(std::filesystem::exists(result.at("bestCheckpoint").get<std::string>()));
  CHECK(std::filesystem::exists(result.at("lastCheckpoint").get<std::string>()));

  std::ifstream log(dir + "/train_log.csv");
  REQUIRE(log.good());
  std::string header;
  REQUIRE(std::getline(log, header));
  CHECK(header ==
        "type,step,epoch,lr,total,pose,visibility,keypoints3d,keypoints2d");

  // The archived config matches what the run used.
  const json saved = json::parse(slurp_text(dir + "/train_config.json"));
  CHECK(saved.at("variant") == "disco");
  CHECK(saved.at("train").at("batch").get<int>() == 6);
  CHECK(saved.at("initSeed").get<int>() == 3);
}

TEST_CASE("eval scores a checkpoint and writes a PCK curve") {
  const std::string report_path = (work_dir() / "ckpt_report.json").string();
  const json result = json::parse(slurp_text(trained_dir() + "/result.json"));
  const RunResult r = run_cli(
      "eval --checkpoint " + result.at("bestCheckpoint").get<std::string>() +
      " --data " + val_dataset() + " --batch 6 --curve --out " + report_path);
  REQUIRE(r.status == 0);

  const json report = json::parse(slurp_text(report_path));
  REQUIRE(report.is_array());
  for (const char* name :
       {"pck2d", "apk", "pck3d", "averageRecall", "poseErrorDeg", "maskIou"})
    CHECK(has_metric(report, name));
  for (const auto& entry : report) {
    if (entry.at("metric") == "poseErrorDeg") continue;
    const double v = entry.at("value").get<double>();
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(entry.at("sampleCount").get<int>() == 12);
  }

  const auto curve = read_csv_rows(work_dir() / "ckpt_report_pck_curve.csv");
  REQUIRE(!curve.empty());
  CHECK(curve[0] == std::vector<std::string>{"alpha", "value"});
  CHECK(curve.size() == 51);  // header + alpha 0.01 .. 0.50
}

TEST_CASE("eval gives perfect scores when predictions equal ground truth") {
  const std::string report_path = (work_dir() / "perfect_report.json").string();
  const RunResult r = run_cli("eval --pred " + perfect_predictions() +
                              " --data " + val_dataset() + " --out " +
                              report_path);
  REQUIRE(r.status == 0);

  const json report = json::parse(slurp_text(report_path));
  CHECK(metric_value(report, "pck2d") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(metric_value(report, "apk") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(metric_value(report, "pck3d") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(metric_value(report, "averageRecall") ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(metric_value(report, "maskIou") ==
        doctest::Approx(1.0).epsilon(1e-12));
  // The argmax bin center sits within half a bin of the true azimuth.
  const double pose_err = metric_value(report, "poseErrorDeg");
  CHECK(pose_err >= 0.0);
  CHECK(pose_err <= 360.0 / 24.0 / 2.0 + 1e-9);
}

TEST_CASE("eval compares two prediction files without a dataset") {
  const std::string report_path = (work_dir() / "pair_report.json").string();
  const RunResult r =
      run_cli("eval --pred " + perfect_predictions() + " --gt " +
              perfect_predictions() + " --out " + report_path);
  REQUIRE(r.status == 0);

  const json report = json::parse(slurp_text(report_path));
  CHECK(metric_value(report, "pck2d") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(metric_value(report, "pck3d") == doctest::Approx(1.0).epsilon(1e-12));
  // Identical files agree on the azimuth bin exactly.
  CHECK(metric_value(report, "poseErrorDeg") ==
        doctest::Approx(0.0).epsilon(1e-12));
  // Without dataset metadata there is no skeleton to rasterize.
  CHECK_FALSE(has_metric(report, "maskIou"));
}

TEST_CASE("gradcheck passes and reports per-op results") {
  const auto out = work_dir() / "gradcheck";
  const RunResult r = run_cli("gradcheck --op-probes 2 --net-probes 1 --out " +
                              out.string());
  REQUIRE(r.status == 0);
  const json doc = json::parse(r.out);
  CHECK(doc.at("command") == "gradcheck");
  CHECK(doc.at("pass").get<bool>());
  REQUIRE(doc.at("ops").size() == 8);
  for (const auto& [name, entry] : doc.at("ops").items()) {
    CAPTURE(name);
    CHECK(entry.at("maxRelErr").get<double>() < 1e-4);
  }
  CHECK(doc.at("network").at("maxRelErr").get<double>() < 1e-3);
  CHECK(std::filesystem::exists(out / "gradcheck.json"));
}

TEST_CASE("plot renders SVGs from logs and curves, rejecting junk") {
  const auto out = work_dir() / "plots";
  const RunResult r =
      run_cli("plot --log " + trained_dir() + "/train_log.csv" + " --curve " +
              (work_dir() / "ckpt_report_pck_curve.csv").string() + " --out " +
              out.string());
  REQUIRE(r.status == 0);
  for (const char* name : {"loss.svg", "pck_curve.svg"}) {
    CAPTURE(name);
    REQUIRE(std::filesystem::exists(out / name));
    const std::string svg = slurp_text(out / name);
    CHECK(svg.find("<svg") != std::string::npos);
  }

  const auto junk = work_dir() / "junk.csv";
  std::ofstream(junk) << "not,a,log\n1,2\n";
  const RunResult bad =
      run_cli("plot --log " + junk.string() + " --out " + out.string());
  CHECK(bad.status == 1);
  CHECK(json::parse(bad.err).at("error").at("code") == "FormatError");
}

TEST_CASE("ablate trains each variant and tabulates the comparison") {
  const auto cfg = work_dir() / "ablate.json";
  json train = train_section();
  train["maxEpochs"] = 1;
  write_json(cfg, json{{"variants", {"disco", "plain-2d"}},
                       {"train", train},
                       {"trainData", train_dataset()},
                       {"valData", val_dataset()},
                       {"initSeed", 3},
                       {"alpha", 0.1}});
  const auto out = work_dir() / "ablate";
  const RunResult r =
      run_cli("ablate --config " + cfg.string() + " --out " + out.string());
  REQUIRE(r.status == 0);

  const auto table = read_csv_rows(out / "table.csv");
  REQUIRE(table.size() == 3);
  CHECK(table[0] ==
        std::vector<std::string>{"variant", "pck2d_full", "pck2d_truncated",
                                 "pck2d_multiObject", "pck2d_all",
                                 "pck3d_full", "yawErrDeg_full"});
  CHECK(table[1][0] == "disco");
  CHECK(table[2][0] == "plain-2d");
  // disco predicts 3D and pose; plain-2d has neither head.
  CHECK(table[1][5] != "NA");
  CHECK(table[1][6] != "NA");
  CHECK(table[2][5] == "NA");
  CHECK(table[2][6] == "NA");

  const json summary = json::parse(slurp_text(out / "summary.json"));
  CHECK(summary.at("command") == "ablate");
  CHECK(summary.at("rows").size() == 2);
  for (const std::string variant : {"disco", "plain-2d"})
    CHECK(std::filesystem::exists(out / variant / "best.dscw"));
}
