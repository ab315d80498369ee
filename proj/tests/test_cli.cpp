// End-to-end checks of the command-line interface: exit codes, file
// outputs, and manifest replay.  Each case shells out to the built binary.
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "fixtures.hpp"
#include "seroclass/serialize.hpp"

using namespace seroclass;
namespace fs = std::filesystem;

namespace {

struct CliRunner {
    fs::path dir;

    CliRunner() {
        static int counter = 0;
        dir = fs::path("cli_test_" + std::to_string(counter++));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~CliRunner() { fs::remove_all(dir); }

    std::string file(const std::string& name) const { return (dir / name).string(); }

    int run(const std::string& args) const {
        const std::string cmd = std::string(SEROCLASS_CLI_PATH) + " " + args +
                                " >" + file("stdout.txt") + " 2>" + file("stderr.txt");
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    }

    std::string stdout_text() const { return read_text_file(file("stdout.txt")); }

    void write_models(int nodes = 256) const {
        const auto pair = fixtures::densities({nodes, QuadScheme::tensor_gauss_legendre});
        save_model(*pair.pos, file("pos.json"));
        save_model(*pair.neg, file("neg.json"));
    }

    std::string models(const std::string& extra = "") const {
        return "--pos-model " + file("pos.json") + " --neg-model " + file("neg.json") +
               (extra.empty() ? "" : " " + extra);
    }
};

std::size_t count_rows_with_label(const std::string& path, const std::string& label) {
    std::ifstream in(path);
    std::string line;
    std::size_t count = 0;
    while (std::getline(in, line))
        if (line.find("," + label + ",") != std::string::npos) ++count;
    return count;
}

std::size_t count_data_rows(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::size_t count = 0;
    std::getline(in, line);  // header
    while (std::getline(in, line))
        if (!line.empty()) ++count;
    return count;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    CliRunner cli;
    CHECK(cli.run("fit --input missing.csv") == 2);           // --family missing
    CHECK(cli.run("nonsense") == 2);                          // unknown subcommand
    cli.write_models(64);
    CHECK(cli.run("classify --input x.csv " + cli.models("--mode nonsense")) == 2);
}

TEST_CASE("data errors exit with code 3") {
    CliRunner cli;
    cli.write_models(64);
    CHECK(cli.run("classify --input does_not_exist.csv " + cli.models()) == 3);

    // Five usable points are below the fit precondition.
    std::string csv = "id,rbd,s1,ref,label\n";
    for (int i = 0; i < 5; ++i)
        csv += "s" + std::to_string(i) + "," + std::to_string(100 + i * 50) + "," +
               std::to_string(120 + i * 40) + ",1000,negative\n";
    write_text_file(cli.file("tiny.csv"), csv);
    CHECK(cli.run("fit --family negative --input " + cli.file("tiny.csv") +
                  " --output " + cli.file("m.json")) == 3);
}

TEST_CASE("separation failure exits with code 4") {
    CliRunner cli;
    cli.write_models(64);
    // Both models the same density: the estimator denominator vanishes.
    fs::copy_file(cli.file("neg.json"), cli.file("pos2.json"));
    const int code = cli.run(
        "simulate --prevalences 0.2 --samples 500 --seed 3 --emit-csv " +
        cli.file("data.csv") + " " + cli.models());
    REQUIRE(code == 0);
    CHECK(cli.run("estimate --input " + cli.file("data.csv") + " --pos-model " +
                  cli.file("pos2.json") + " --neg-model " + cli.file("neg.json") +
                  " --nodes 128 --output-prefix " + cli.file("est")) == 4);
}

TEST_CASE("simulate runs are deterministic in the seed") {
    CliRunner cli;
    cli.write_models(64);
    REQUIRE(cli.run("simulate --prevalences 0.3 --samples 400 --trials 1 --seed 7 "
                    "--emit-csv " + cli.file("a.csv") + " " + cli.models()) == 0);
    REQUIRE(cli.run("simulate --prevalences 0.3 --samples 400 --trials 1 --seed 7 "
                    "--emit-csv " + cli.file("b.csv") + " " + cli.models()) == 0);
    REQUIRE(cli.run("simulate --prevalences 0.3 --samples 400 --trials 1 --seed 8 "
                    "--emit-csv " + cli.file("c.csv") + " " + cli.models()) == 0);
    CHECK(fnv1a64_file(cli.file("a.csv")) == fnv1a64_file(cli.file("b.csv")));
    CHECK(fnv1a64_file(cli.file("a.csv")) != fnv1a64_file(cli.file("c.csv")));
}

TEST_CASE("classify: prevalence 0 labels everything negative") {
    CliRunner cli;
    cli.write_models();
    REQUIRE(cli.run("simulate --prevalences 0.4 --samples 800 --seed 5 --emit-csv " +
                    cli.file("data.csv") + " " + cli.models()) == 0);
    REQUIRE(cli.run("classify --input " + cli.file("data.csv") + " " +
                    cli.models("--mode binary --prevalence 0 --output " +
                               cli.file("labels.csv"))) == 0);
    const std::size_t rows = count_data_rows(cli.file("labels.csv"));
    CHECK(rows > 700);  // a few samples may fall outside the domain
    CHECK(count_rows_with_label(cli.file("labels.csv"), "negative") == rows);
}

TEST_CASE("classify: ternary interval produces holdouts; collapsed interval matches binary") {
    CliRunner cli;
    cli.write_models();
    REQUIRE(cli.run("simulate --prevalences 0.25 --samples 4000 --seed 11 --emit-csv " +
                    cli.file("data.csv") + " " + cli.models()) == 0);

    REQUIRE(cli.run("classify --input " + cli.file("data.csv") + " " +
                    cli.models("--mode ternary --p-lo 0.01 --p-hi 0.9 --output " +
                               cli.file("t.csv"))) == 0);
    CHECK(count_rows_with_label(cli.file("t.csv"), "holdout") > 0);

    REQUIRE(cli.run("classify --input " + cli.file("data.csv") + " " +
                    cli.models("--mode ternary --p-lo 0.3 --p-hi 0.3 --output " +
                               cli.file("t30.csv"))) == 0);
    REQUIRE(cli.run("classify --input " + cli.file("data.csv") + " " +
                    cli.models("--mode binary --prevalence 0.3 --output " +
                               cli.file("b30.csv"))) == 0);
    // Labels and scores coincide away from exact ties, which have measure
    // zero for continuous draws.
    CHECK(fnv1a64_file(cli.file("t30.csv")) == fnv1a64_file(cli.file("b30.csv")));
}

TEST_CASE("estimate recovers the simulated prevalence") {
    CliRunner cli;
    cli.write_models();
    const std::size_t S = 10000;
    REQUIRE(cli.run("simulate --prevalences 0.2 --samples " + std::to_string(S) +
                    " --seed 21 --emit-csv " + cli.file("data.csv") + " " +
                    cli.models()) == 0);
    REQUIRE(cli.run("estimate --input " + cli.file("data.csv") + " " +
                    cli.models("--nodes 256 --output-prefix " + cli.file("est"))) == 0);
    const json doc = read_json_file(cli.file("est.estimate.json"));
    CHECK(std::abs(doc.at("final_p_hat").get<double>() - 0.2) <
          4.0 / std::sqrt(static_cast<double>(S)));

    // Single-update variant (the estimate-then-reclassify procedure).
    REQUIRE(cli.run("estimate --input " + cli.file("data.csv") + " " +
                    cli.models("--nodes 256 --max-iter 1 --output-prefix " +
                               cli.file("single"))) == 0);
    const json single = read_json_file(cli.file("single.estimate.json"));
    CHECK(single.at("iterations").size() == 1);
}

TEST_CASE("estimate on an all-negative draw clamps near zero") {
    CliRunner cli;
    cli.write_models();
    REQUIRE(cli.run("simulate --prevalences 0 --samples 5000 --seed 4 --emit-csv " +
                    cli.file("neg.csv") + " " + cli.models()) == 0);
    REQUIRE(cli.run("estimate --input " + cli.file("neg.csv") + " " +
                    cli.models("--nodes 256 --output-prefix " + cli.file("est"))) == 0);
    const json doc = read_json_file(cli.file("est.estimate.json"));
    CHECK(doc.at("final_p_hat").get<double>() < 0.01);
}

TEST_CASE("sweep reports the argmin at the true prevalence") {
    CliRunner cli;
    cli.write_models();
    REQUIRE(cli.run("sweep --true-p 0.1 --nodes 256 --output " + cli.file("sweep.csv") +
                    " " + cli.models()) == 0);
    const json doc = read_json_file(cli.file("sweep.csv.summary.json"));
    CHECK(doc.at("argmin_q").get<double>() == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(count_data_rows(cli.file("sweep.csv")) == 90);
}

TEST_CASE("contour emits one polyline family per prevalence") {
    CliRunner cli;
    cli.write_models();
    REQUIRE(cli.run("contour --prevalences 0.5,0.1446,0.1,0.01,0.001 --resolution 128 "
                    "--output " + cli.file("contours.csv") + " " + cli.models()) == 0);
    std::ifstream in(cli.file("contours.csv"));
    std::string line;
    std::getline(in, line);
    std::set<std::string> prevalences;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        prevalences.insert(line.substr(0, line.find(',')));
    }
    CHECK(prevalences.size() == 5);
}

TEST_CASE("fit round-trips the generating parameters through a raw CSV") {
    CliRunner cli;
    cli.write_models();
    REQUIRE(cli.run("simulate --prevalences 0.5 --samples 100000 --seed 31 --emit-csv " +
                    cli.file("mixed.csv") + " " + cli.models()) == 0);

    REQUIRE(cli.run("fit --family negative --input " + cli.file("mixed.csv") +
                    " --nodes 256 --output " + cli.file("neg_fit.json")) == 0);
    REQUIRE(cli.run("fit --family positive --input " + cli.file("mixed.csv") +
                    " --nodes 256 --output " + cli.file("pos_fit.json")) == 0);

    const auto neg_fit = load_model(cli.file("neg_fit.json"));
    const auto truth_n = fixtures::negative_params();
    CHECK(neg_fit.negative_params().theta ==
          doctest::Approx(truth_n.theta).epsilon(0.05));
    CHECK(neg_fit.negative_params().k == doctest::Approx(truth_n.k).epsilon(0.05));
    CHECK(neg_fit.negative_params().alpha ==
          doctest::Approx(truth_n.alpha).epsilon(0.05));
    CHECK(neg_fit.negative_params().beta == doctest::Approx(truth_n.beta).epsilon(0.05));
    CHECK(std::abs(neg_fit.negative_params().mu - truth_n.mu) < 0.05 * truth_n.alpha);

    const auto pos_fit = load_model(cli.file("pos_fit.json"));
    const auto truth_p = fixtures::positive_params();
    CHECK(pos_fit.positive_params().alpha ==
          doctest::Approx(truth_p.alpha).epsilon(0.05));
    CHECK(pos_fit.positive_params().beta_shape ==
          doctest::Approx(truth_p.beta_shape).epsilon(0.05));
    CHECK(pos_fit.positive_params().theta ==
          doctest::Approx(truth_p.theta).epsilon(0.05));
}

TEST_CASE("manifests replay to byte-identical outputs") {
    CliRunner cli;
    cli.write_models();

    // sweep
    REQUIRE(cli.run("sweep --true-p 0.2 --nodes 128 --q-count 30 --output " +
                    cli.file("s.csv") + " --manifest " + cli.file("s.manifest.json") +
                    " " + cli.models()) == 0);
    const auto sweep_digest = fnv1a64_file(cli.file("s.csv"));
    REQUIRE(cli.run("replay " + cli.file("s.manifest.json")) == 0);
    CHECK(fnv1a64_file(cli.file("s.csv")) == sweep_digest);

    // simulate (experiment mode)
    REQUIRE(cli.run("simulate --prevalences 0.1,0.3 --samples 100,400 --trials 10 "
                    "--seed 17 --mode adaptive --nodes 128 --out-dir " +
                    cli.file("mc") + " --manifest " + cli.file("mc.manifest.json") +
                    " " + cli.models()) == 0);
    const auto cells_digest = fnv1a64_file(cli.file("mc") + "/mc_cells.csv");
    REQUIRE(cli.run("replay " + cli.file("mc.manifest.json")) == 0);
    CHECK(fnv1a64_file(cli.file("mc") + "/mc_cells.csv") == cells_digest);

    // replay refuses drifted inputs
    write_text_file(cli.file("pos.json"), "{}");
    CHECK(cli.run("replay " + cli.file("s.manifest.json")) == 3);
}
