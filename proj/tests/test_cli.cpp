#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "fusionette/binary_io.hpp"
#include "fusionette/embedding_store.hpp"
#include "fusionette/metrics.hpp"

using namespace fusionette;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "fusionette_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

const std::vector<std::string> kSmallArch{"--hidden", "8", "--n-tok", "2", "--n-tok-fused", "2"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

fs::path small_dataset(const std::string& name, std::size_t dim_text = 16) {
  const auto dir = fresh_dir(name);
  const auto r = run({"gen-synth", "--kind", "xor", "--n", "48", "--dim-image", "16", "--dim-text",
                      std::to_string(dim_text), "--seed", "5", "--out", dir.string()});
  REQUIRE(r.code == 0);
  return dir;
}

}  // namespace

TEST_CASE("gen-synth writes three splits and a sidecar") {
  const auto dir = small_dataset("gen");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 4);
  const auto sidecar = read_json(dir / "synthetic.json");
  CHECK(sidecar["kind"] == "xor");
  CHECK(sidecar["sizes"]["train"] == 48);
  CHECK(sidecar["sizes"]["validation"] == 6);
  const auto splits = discover_splits(dir);
  CHECK(read_split(splits.train).size() == 48);

  const auto again = small_dataset("gen_again");
  for (const char* name : {"train.mmeb", "validation.mmeb", "test.mmeb"})
    CHECK(stored_crc(dir / name) == stored_crc(again / name));
}

TEST_CASE("usage errors") {
  CHECK(run({"gen-synth", "--n", "0", "--out", fresh_dir("zero").string()}).code ==
        cli::kExitUsage);
  CHECK(run({"gen-synth", "--kind", "spiral", "--out", fresh_dir("spiral").string()}).code ==
        cli::kExitUsage);
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("train writes models, manifest and metrics with the default hyperparameters") {
  const auto data = small_dataset("train_data");
  const auto out = fresh_dir("train_out");
  const auto r = run(with({"train", "--data", data.string(), "--variant", "guided_ca_diff_attn",
                           "--out", out.string()},
                          kSmallArch));
  REQUIRE(r.code == 0);
  const auto manifest = read_json(out / "manifest.json");
  const auto& cfg = manifest["train_config"];
  CHECK(cfg["lr"] == 0.001);
  CHECK(cfg["batch_size"] == 32);
  CHECK(cfg["max_epochs"] == 50);
  CHECK(cfg["patience"] == 5);
  CHECK(cfg["runs"] == 3);
  CHECK(cfg["seed"] == 0);
  CHECK(manifest["spec"]["variant"] == "guided_ca_diff_attn");
  CHECK(manifest["spec"]["hidden"] == 8);
  CHECK(manifest["dataset"]["files"]["train"]["records"] == 48);
  CHECK(manifest["runs"].size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(fs::exists(out / ("guided_ca_diff_attn_run" + std::to_string(i) + ".fusn")));
  const auto csv = slurp(out / "metrics.csv");
  CHECK(csv.rfind("variant,task,run,accuracy,macro_f1,weighted_f1\n", 0) == 0);
  CHECK(csv.find("guided_ca_diff_attn,0,mean,") != std::string::npos);

  SUBCASE("eval reproduces the manifest metrics") {
    const auto e = run({"eval", "--model", (out / "guided_ca_diff_attn_run1.fusn").string(),
                        "--data", data.string()});
    REQUIRE(e.code == 0);
    const auto report = json::parse(e.out);
    CHECK(report == manifest["runs"][1]["test"]);
    const auto v = run({"eval", "--model", (out / "guided_ca_diff_attn_run1.fusn").string(),
                        "--data", data.string(), "--split", "validation"});
    CHECK(v.code == 0);
    CHECK(json::parse(v.out)["n_samples"] == 6);
  }
  SUBCASE("corrupt or missing model files") {
    auto bytes = io::read_file(out / "guided_ca_diff_attn_run0.fusn");
    bytes[bytes.size() / 2] ^= 0xff;
    const auto bad = fresh_dir("corrupt");
    fs::create_directories(bad);
    io::write_file_atomic(bad / "m.fusn", bytes);
    CHECK(run({"eval", "--model", (bad / "m.fusn").string(), "--data", data.string()}).code ==
          cli::kExitFormat);
    CHECK(run({"eval", "--model", (bad / "none.fusn").string(), "--data", data.string()}).code ==
          cli::kExitIo);
  }
  SUBCASE("model and data widths must agree") {
    const auto other = small_dataset("eval_wide", 24);
    CHECK(run({"eval", "--model", (out / "guided_ca_diff_attn_run0.fusn").string(), "--data",
               other.string()})
              .code == cli::kExitDimension);
  }
}

TEST_CASE("train errors map to distinct exit codes") {
  const auto data = small_dataset("train_err");
  CHECK(run({"train", "--data", data.string(), "--variant", "bogus", "--out",
             fresh_dir("bogus").string()})
            .code == cli::kExitUnknownVariant);
  CHECK(run({"train", "--data", fresh_dir("nowhere").string(), "--out",
             fresh_dir("nowhere_out").string()})
            .code == cli::kExitIo);

  // Empty training split.
  const auto empty = fresh_dir("empty_train");
  fs::create_directories(empty);
  auto train = read_split(data / "train.mmeb");
  train.records.clear();
  write_split(train, empty / "train.mmeb");
  fs::copy_file(data / "validation.mmeb", empty / "validation.mmeb");
  fs::copy_file(data / "test.mmeb", empty / "test.mmeb");
  CHECK(run(with({"train", "--data", empty.string(), "--variant", "guided_ca", "--max-epochs", "1",
                  "--out", fresh_dir("empty_out").string()},
                 kSmallArch))
            .code == cli::kExitTraining);

  // Corrupted data file.
  const auto broken = fresh_dir("broken_data");
  fs::copy(data, broken);
  auto bytes = io::read_file(broken / "test.mmeb");
  bytes[bytes.size() - 2] ^= 0x01;
  io::write_file_atomic(broken / "test.mmeb", bytes);
  CHECK(run(with({"train", "--data", broken.string(), "--variant", "guided_ca", "--out",
                  fresh_dir("broken_out").string()},
                 kSmallArch))
            .code == cli::kExitFormat);

  // Hidden width that DiffAttn cannot tokenize.
  CHECK(run({"train", "--data", data.string(), "--hidden", "3", "--n-tok", "2", "--out",
             fresh_dir("odd_out").string()})
            .code != 0);
}

TEST_CASE("train is byte-for-byte repeatable") {
  const auto data = small_dataset("det_data");
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  for (const auto& out : {a, b}) {
    REQUIRE(run(with({"train", "--data", data.string(), "--variant", "guided_ca", "--runs", "2",
                      "--max-epochs", "4", "--lr", "0.05", "--out", out.string()},
                     kSmallArch))
                .code == 0);
  }
  CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));
  CHECK(slurp(a / "metrics.json") == slurp(b / "metrics.json"));
  CHECK(slurp(a / "guided_ca_run0.fusn") == slurp(b / "guided_ca_run0.fusn"));
  CHECK(slurp(a / "guided_ca_run1.fusn") == slurp(b / "guided_ca_run1.fusn"));
}

TEST_CASE("ablate covers every variant in registry order") {
  const auto data = small_dataset("abl_data");
  const auto a = fresh_dir("abl_a"), b = fresh_dir("abl_b");
  for (const auto& out : {a, b}) {
    REQUIRE(run(with({"ablate", "--data", data.string(), "--variants", "all", "--runs", "2",
                      "--max-epochs", "2", "--out", out.string()},
                     kSmallArch))
                .code == 0);
  }
  const auto csv = slurp(a / "ablation.csv");
  CHECK(csv == slurp(b / "ablation.csv"));
  CHECK(slurp(a / "ablation_runs.csv") == slurp(b / "ablation_runs.csv"));
  std::istringstream lines(csv);
  std::string line;
  std::vector<std::string> names;
  std::getline(lines, line);
  CHECK(line == "variant,accuracy,macro_f1,weighted_f1");
  while (std::getline(lines, line)) names.push_back(line.substr(0, line.find(',')));
  CHECK(names == std::vector<std::string>{"image_only", "text_only", "cross_attention", "guided_ca",
                                          "guided_ca_self_attn", "cross_diff_attn",
                                          "guided_ca_diff_attn"});

  SUBCASE("list order does not matter") {
    const auto c = fresh_dir("abl_c");
    REQUIRE(run(with({"ablate", "--data", data.string(), "--variants",
                      "guided_ca,image_only", "--runs", "2", "--max-epochs", "2", "--out",
                      c.string()},
                     kSmallArch))
                .code == 0);
    CHECK(slurp(c / "ablation.csv").rfind("variant,accuracy,macro_f1,weighted_f1\nimage_only,", 0) == 0);
  }
}

TEST_CASE("ablate reports failing variants and keeps the rest") {
  const auto data = small_dataset("abl_uneven", 24);  // cross-attention needs equal widths
  const auto out = fresh_dir("abl_uneven_out");
  const auto r = run(with({"ablate", "--data", data.string(), "--runs", "1", "--max-epochs", "1",
                           "--out", out.string()},
                          kSmallArch));
  CHECK(r.code == cli::kExitPartial);
  CHECK(r.err.find("cross_attention failed") != std::string::npos);
  const auto manifest = read_json(out / "manifest.json");
  CHECK(manifest["failures"].size() == 2);
  CHECK(manifest["variants"].size() == 5);
}

TEST_CASE("validate-counts prints per-split deltas") {
  const auto data = small_dataset("counts");
  const auto r = run({"validate-counts", "--data", data.string(), "--task", "3"});
  CHECK(r.code == 0);
  const auto report = json::parse(r.out);
  CHECK(report["pass"] == false);
  CHECK(report["checks"][0]["delta"] == 48 - 2468);
  CHECK(run({"validate-counts", "--data", data.string(), "--task", "3", "--strict"}).code == 1);
  CHECK(run({"validate-counts", "--data", data.string()}).code == cli::kExitUsage);
}
