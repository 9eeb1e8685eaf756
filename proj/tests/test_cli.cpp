#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "gbaudit/archive.hpp"
#include "gbaudit/dataset_io.hpp"
#include "gbaudit/trainer.hpp"
#include "test_util.hpp"

using namespace gbaudit;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd =
        std::string(GBAUDIT_CLI_PATH) + " " + args + " > cli_stdout.txt 2> cli_stderr.txt";
    const int status = std::system(cmd.c_str());
    if (status < 0) return -1;
    return (status >> 8) & 0xff;  // POSIX wait status
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void make_golden_inputs() {
    // fixed tiny net and dataset; everything below is seeded
    std::vector<Layer> layers;
    layers.push_back(DenseLayer{test::random_matrix(6, 4, 11, 0.8)});
    layers.push_back(DenseLayer{test::random_matrix(3, 6, 12, 0.8)});
    write_weights(make_network(std::move(layers), 4), "golden_net.gbwt");
    const DatasetPair pair = synth_dataset(4, 3, 12, 0, 21, 1.0);
    write_dataset_csv(pair.train, "golden_data.csv");
}

}  // namespace

TEST_CASE("cli: no arguments is a usage error, --help succeeds") {
    CHECK(run_cli("") == 1);
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("bounds --help") == 0);
    CHECK(run_cli("definitely-not-a-command") == 1);
}

TEST_CASE("cli: randomized subcommands insist on --seed") {
    make_golden_inputs();
    CHECK(run_cli("jacobian --weights golden_net.gbwt --data golden_data.csv") == 1);
    CHECK(run_cli("verify-circulant --k 4 --s 2 --n 2 --p 8") == 1);
}

TEST_CASE("cli: verify-circulant emits a passing certificate") {
    CHECK(run_cli("verify-circulant --k 4 --s 2 --n 2 --p 8 --seed 5 --tol 1e-8 --out cert.json") ==
          0);
    const std::string cert = slurp("cert.json");
    CHECK(cert.find("\"pass\":true") != std::string::npos);
    CHECK(cert.find("\"expected\":1.4142135623730951") != std::string::npos);
    std::remove("cert.json");
}

TEST_CASE("cli: missing file and bad magic map to exit code 1") {
    CHECK(run_cli("norms --weights does_not_exist.gbwt") == 1);
    write_text_file("not_an_archive.gbwt", "XXXXXXXXXXXXXXXXXXXXXXXX");
    CHECK(run_cli("norms --weights not_an_archive.gbwt") == 1);
    std::remove("not_an_archive.gbwt");
}

TEST_CASE("cli: bounds reproduces the checked-in golden report byte-for-byte") {
    unsetenv("SOURCE_DATE_EPOCH");
    make_golden_inputs();
    const std::string flags =
        "bounds --weights golden_net.gbwt --data golden_data.csv --gamma 0.5 --delta 0.05 "
        "--bounded-loss 1 --tol 1e-10 --seed 9 --out golden_out.json --csv golden_out.csv";
    REQUIRE(run_cli(flags) == 0);
    const std::string once = slurp("golden_out.json");

    // identical flags and seed produce identical bytes
    REQUIRE(run_cli(flags) == 0);
    CHECK(slurp("golden_out.json") == once);

    const std::string golden_path = std::string(GBAUDIT_SOURCE_DIR) + "/tests/golden/bounds_report.json";
    std::ifstream golden(golden_path, std::ios::binary);
    REQUIRE_MESSAGE(golden.good(), "expected golden file at " + golden_path);
    const std::string expected((std::istreambuf_iterator<char>(golden)),
                               std::istreambuf_iterator<char>());
    CHECK(once == expected);

    // the CSV export lists the same value names in order
    const std::string csv = slurp("golden_out.csv");
    CHECK(csv.rfind("name,value\nthm1,", 0) == 0);
    std::remove("golden_out.json");
    std::remove("golden_out.csv");
}

TEST_CASE("cli: jacobian report is deterministic in the seed") {
    make_golden_inputs();
    const std::string flags =
        "jacobian --weights golden_net.gbwt --data golden_data.csv --from 1 --to 2 --tol 1e-9 "
        "--seed 3 --out jac_a.json";
    REQUIRE(run_cli(flags) == 0);
    const std::string a = slurp("jac_a.json");
    REQUIRE(run_cli(flags) == 0);
    CHECK(slurp("jac_a.json") == a);
    CHECK(a.find("\"requested\"") != std::string::npos);
    std::remove("jac_a.json");
}

TEST_CASE("cli: train writes an archive the other commands can audit") {
    const int rc = run_cli(
        "train --arch conv:3:9:3,dense:4 --synth 27 4 60 20 --init orthogonal_filters "
        "--constraint unit_norm --lr 0.05 --epochs 2 --batch 10 --seed 13 "
        "--out trained.gbwt --history trained_history.csv");
    REQUIRE(rc == 0);
    const NetworkSpec net = read_weights("trained.gbwt");
    CHECK(net.depth() == 2);
    const std::string history = slurp("trained_history.csv");
    CHECK(history.rfind("epoch,objective,train_acc,test_acc,prod_spectral,b_jac_sample\n", 0) == 0);
    CHECK(run_cli("norms --weights trained.gbwt --out trained_norms.json") == 0);
    std::remove("trained.gbwt");
    std::remove("trained_history.csv");
    std::remove("trained_norms.json");
    std::remove("golden_net.gbwt");
    std::remove("golden_data.csv");
    std::remove("cli_stdout.txt");
    std::remove("cli_stderr.txt");
}
