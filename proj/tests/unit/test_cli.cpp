#include "rhyme/dataset.hpp"
#include "rhyme/metrics.hpp"

#include "support.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <string>

using namespace rhyme;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(RHYME_CLI_PATH) + " --quiet " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

const std::string kTiny = std::string("--config ") + RHYME_CONFIG_DIR + "/tiny.ini";

}  // namespace

TEST_CASE("every subcommand runs end to end on the tiny setting") {
    test::TempDir dir("cli");
    const fs::path d = dir.path();
    const std::string data = (d / "data").string();
    const std::string model = (d / "model").string();

    REQUIRE(run(kTiny + " --out " + data + " generate") == 0);
    CHECK(fs::exists(d / "data" / "meta.json"));
    CHECK(fs::exists(d / "data" / trajectory_file_name(11)));

    REQUIRE(run(kTiny + " --out " + (d / "pod.rxp").string() + " pod --data " + data) == 0);
    CHECK(run(kTiny + " --out " + (d / "basis.rxw").string() + " train-basis --pod " + (d / "pod.rxp").string()) == 0);
    CHECK(fs::exists(d / "basis.csv"));

    REQUIRE(run(kTiny + " --out " + model + " train --data " + data + " --basis " + (d / "basis.rxw").string()) == 0);
    CHECK(first_line(d / "model" / "curves.csv") == "epoch,train_loss,val_loss,lr");
    CHECK(line_count(d / "model" / "curves.csv") == 5);  // header, untrained row, three epochs
    CHECK(first_line(d / "model" / "test_metrics.csv") == "trajectory_id,rel_l2");
    CHECK(fs::exists(d / "model" / "manifest.json"));

    const std::string ev = (d / "eval10.csv").string();
    CHECK(run(kTiny + " --out " + ev + " evaluate --model " + model + " --data " + data + " --horizon 10") == 0);
    CHECK(first_line(ev) == "trajectory_id,rel_l2");
    CHECK(line_count(ev) == 3);
    CHECK(fs::exists(d / "eval10_summary.csv"));

    std::ofstream(d / "q.csv") << "x,t\n0.3,0.0\n-9.1,2.75\n4.2,5\n";
    const std::string pred = (d / "pred.csv").string();
    CHECK(run("--out " + pred + " predict --model " + model + " --traj " + (d / "data" / trajectory_file_name(0)).string() +
              " --queries " + (d / "q.csv").string()) == 0);
    CHECK(first_line(pred) == "x,t,u_hat");
    CHECK(line_count(pred) == 4);

    CHECK(run(kTiny + " --out " + (d / "bl").string() + " baseline --data " + data + " --model " + model) == 0);
    CHECK(first_line(d / "bl" / "curves.csv") == "epoch,train_loss,val_loss,lr");
    CHECK(first_line(d / "bl" / "test_metrics.csv") == "trajectory_id,rel_l2");

    CHECK(run(kTiny + " --out " + (d / "ft").string() + " finetune --pretrained " + model + " --data " + data + " --full") == 0);
    CHECK(fs::exists(d / "ft" / "model" / "manifest.json"));

    // contract violations
    std::ofstream(d / "bad.ini") << "[data]\nwidth = 3\n";
    CHECK(run("--config " + (d / "bad.ini").string() + " --out " + data + "2 generate") == 2);
    CHECK(run(kTiny + " generate") == 2);
    CHECK(run("--out " + pred + " predict --model " + model + " --traj " + (d / "none.rxt").string() + " --queries " +
              (d / "q.csv").string()) == 2);
    std::ofstream(d / "bad_q.csv") << "x,t\nabc,1\n";
    CHECK(run("--out " + pred + " predict --model " + model + " --traj " + (d / "data" / trajectory_file_name(0)).string() +
              " --queries " + (d / "bad_q.csv").string()) == 2);
    CHECK(run("--out " + pred + " predict --model " + model + " --traj " + (d / "data" / trajectory_file_name(0)).string() +
              " --queries " + (d / "q.csv").string() + " --bogus") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run(kTiny + " --out " + (d / "bl2").string() + " baseline --data " + data) == 2);
}

TEST_CASE("an unstable step size exits with the divergence code") {
    test::TempDir dir("cli_div");
    std::ofstream(dir.path() / "unstable.ini") << "[data]\nn_points = 16\ndt = 3\ndelta = 3\nt_end = 3600\n"
                                                  "block_length = 1\nn_trajectories = 1\nslope = 1\n[pod]\nn_spatial = 8\nr = 4\n";
    CHECK(run("--config " + (dir.path() / "unstable.ini").string() + " --out " + (dir.path() / "d").string() + " generate") == 3);
}
