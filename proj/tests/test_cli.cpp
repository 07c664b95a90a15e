#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "iotid/bytes.hpp"
#include "iotid/cli.hpp"
#include "iotid/representation.hpp"

using namespace iotid;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"iotid"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / "iotid_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// one tiny corpus shared by the pipeline cases below; generating it is the
// expensive part, so it is built once on first use
struct Corpus {
    fs::path root, manifest, cache;
};

const Corpus& tiny_corpus() {
    static Corpus c = [] {
        Corpus made;
        made.root = fresh_dir("corpus");
        made.manifest = made.root / "manifest.json";
        made.cache = made.root / "samples.bin";
        REQUIRE(run_cli({"generate", "--out", made.root.string(), "--setups", "4", "--devices",
                         "4", "--seed", "5"}) == 0);
        REQUIRE(run_cli({"ingest", "--manifest", made.manifest.string(), "--out",
                         made.cache.string(), "--seed", "5"}) == 0);
        return made;
    }();
    return c;
}

}  // namespace

TEST_CASE("argument errors exit with code two") {
    CHECK(run_cli({}) == 2);                       // a subcommand is required
    CHECK(run_cli({"frobnicate"}) == 2);           // unknown subcommand
    CHECK(run_cli({"ingest"}) == 2);               // missing required option
    CHECK(run_cli({"train", "--model", "gru"}) == 2);  // not in the choice set
    CHECK(run_cli({"--help"}) == 0);
    CHECK(run_cli({"generate", "--help"}) == 0);
}

TEST_CASE("runtime errors exit with code two and do not throw") {
    auto dir = fresh_dir("errs");
    CHECK(run_cli({"ingest", "--manifest", (dir / "missing.json").string()}) == 2);

    std::ofstream(dir / "broken.json") << "[{\"pcap_path\": 3}]";
    CHECK(run_cli({"ingest", "--manifest", (dir / "broken.json").string()}) == 2);

    CHECK(run_cli({"eval", "--model-file", (dir / "nope.ckpt").string(), "--cache",
                   (dir / "nope.bin").string()}) == 2);
}

TEST_CASE("generate writes a loadable corpus deterministically") {
    auto a = fresh_dir("gen_a"), b = fresh_dir("gen_b");
    REQUIRE(run_cli({"generate", "--out", a.string(), "--setups", "2", "--devices", "3",
                     "--seed", "9"}) == 0);
    REQUIRE(run_cli({"generate", "--out", b.string(), "--setups", "2", "--devices", "3",
                     "--seed", "9"}) == 0);

    auto entries = read_manifest((a / "manifest.json").string());
    CHECK(entries.size() == 6);  // 3 devices x 2 setups
    std::set<std::string> devices;
    for (const auto& e : entries) {
        devices.insert(e.device_type);
        CAPTURE(e.pcap_path);
        CHECK(fs::exists(a / e.pcap_path));
        CHECK(read_file((a / e.pcap_path).string()) == read_file((b / e.pcap_path).string()));
    }
    CHECK(devices.size() == 3);
    CHECK(read_file((a / "manifest.json").string()) == read_file((b / "manifest.json").string()));

    auto c = fresh_dir("gen_c");
    REQUIRE(run_cli({"generate", "--out", c.string(), "--setups", "2", "--devices", "3",
                     "--seed", "10"}) == 0);
    CHECK(read_file((a / entries[0].pcap_path).string()) !=
          read_file((c / entries[0].pcap_path).string()));

    // run metadata records the invocation
    CHECK(fs::exists(a / "run_meta.json"));
}

TEST_CASE("ingest produces a cache with sidecar metadata") {
    const Corpus& corpus = tiny_corpus();
    SampleCache cache = read_sample_cache(corpus.cache.string());
    CHECK(cache.labels.size() > 20);
    CHECK(cache.labels.size() == cache.payloads.size());
    auto classes = read_cache_classes(corpus.cache.string() + ".meta.json");
    CHECK(classes.size() == 4);
    for (std::uint16_t label : cache.labels) CHECK(label < classes.size());

    SUBCASE("re-ingesting yields the identical cache") {
        auto out2 = corpus.root / "samples2.bin";
        REQUIRE(run_cli({"ingest", "--manifest", corpus.manifest.string(), "--out",
                         out2.string(), "--seed", "5"}) == 0);
        CHECK(read_file(corpus.cache.string()) == read_file(out2.string()));
    }
    SUBCASE("setup granularity gives one sample per capture") {
        auto out3 = corpus.root / "setup.bin";
        REQUIRE(run_cli({"ingest", "--manifest", corpus.manifest.string(), "--out",
                         out3.string(), "--granularity", "setup", "--seed", "5"}) == 0);
        SampleCache by_setup = read_sample_cache(out3.string());
        CHECK(by_setup.labels.size() == 16);  // 4 devices x 4 setups
        for (const auto& p : by_setup.payloads) CHECK(p.size() == 784);
    }
    SUBCASE("sanitize log lists address replacements") {
        auto out4 = corpus.root / "log.bin";
        auto log = corpus.root / "sanitize.log";
        REQUIRE(run_cli({"ingest", "--manifest", corpus.manifest.string(), "--out",
                         out4.string(), "--sanitize-log", log.string(), "--seed", "5"}) == 0);
        std::ifstream f(log);
        std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        CHECK(text.find("10.") != std::string::npos);  // replacement prefix
    }
}

TEST_CASE("baseline trains evaluates and benches end to end") {
    const Corpus& corpus = tiny_corpus();
    auto model = corpus.root / "baseline.json";
    REQUIRE(run_cli({"train", "--model", "baseline", "--manifest", corpus.manifest.string(),
                     "--out", model.string(), "--trees", "10", "--seed", "5"}) == 0);
    REQUIRE(fs::exists(model));

    auto eval_dir = corpus.root / "eval_baseline";
    REQUIRE(run_cli({"eval", "--model-file", model.string(), "--manifest",
                     corpus.manifest.string(), "--out-dir", eval_dir.string(), "--seed",
                     "5"}) == 0);
    CHECK(fs::exists(eval_dir / "metrics.json"));
    CHECK(fs::exists(eval_dir / "confusion.csv"));
    CHECK(fs::exists(eval_dir / "confusion_normalized.csv"));

    std::ifstream f(eval_dir / "metrics.json");
    std::string metrics((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(metrics.find("\"accuracy\"") != std::string::npos);
    CHECK(metrics.find("\"per_class\"") != std::string::npos);
}

TEST_CASE("cnn trains evaluates benches and explains end to end") {
    const Corpus& corpus = tiny_corpus();
    auto model = corpus.root / "cnn.ckpt";
    auto history = corpus.root / "history.csv";
    REQUIRE(run_cli({"train", "--model", "cnn", "--cache", corpus.cache.string(), "--out",
                     model.string(), "--epochs", "1", "--batch", "16", "--history",
                     history.string(), "--seed", "5"}) == 0);
    REQUIRE(fs::exists(model));

    std::ifstream hf(history);
    std::string hline;
    std::getline(hf, hline);
    CHECK(hline == "epoch,train_loss,train_acc,test_acc");
    std::getline(hf, hline);
    CHECK(hline.rfind("1,", 0) == 0);

    auto eval_dir = corpus.root / "eval_cnn";
    REQUIRE(run_cli({"eval", "--model-file", model.string(), "--cache", corpus.cache.string(),
                     "--out-dir", eval_dir.string(), "--seed", "5"}) == 0);
    CHECK(fs::exists(eval_dir / "metrics.json"));

    auto bench_out = corpus.root / "latency.json";
    REQUIRE(run_cli({"bench", "--cache", corpus.cache.string(), "--cnn", model.string(),
                     "--out", bench_out.string(), "--samples", "100", "--reps", "1", "--seed",
                     "5"}) == 0);
    std::ifstream bf(bench_out);
    std::string bench((std::istreambuf_iterator<char>(bf)), std::istreambuf_iterator<char>());
    CHECK(bench.find("\"cnn\"") != std::string::npos);
    CHECK(bench.find("mean_ms") != std::string::npos);

    auto explain_dir = corpus.root / "explain_cnn";
    REQUIRE(run_cli({"explain", "--model-file", model.string(), "--cache",
                     corpus.cache.string(), "--out-dir", explain_dir.string(), "--samples", "2",
                     "--background", "8", "--draws", "4", "--seed", "5"}) == 0);
    CHECK(fs::exists(explain_dir / "importance_bytes.csv"));
    CHECK(fs::exists(explain_dir / "importance_rows.csv"));
    CHECK(fs::exists(explain_dir / "importance_summary.json"));
}

TEST_CASE("lstm trains and evaluates end to end") {
    const Corpus& corpus = tiny_corpus();
    auto model = corpus.root / "lstm.ckpt";
    REQUIRE(run_cli({"train", "--model", "lstm", "--cache", corpus.cache.string(), "--out",
                     model.string(), "--epochs", "1", "--batch", "16", "--chunk", "7",
                     "--seed", "5"}) == 0);
    REQUIRE(fs::exists(model));

    auto eval_dir = corpus.root / "eval_lstm";
    REQUIRE(run_cli({"eval", "--model-file", model.string(), "--cache", corpus.cache.string(),
                     "--out-dir", eval_dir.string(), "--seed", "5"}) == 0);
    CHECK(fs::exists(eval_dir / "metrics.json"));
}
