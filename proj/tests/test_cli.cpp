#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "focl/campaigns.hpp"
#include "focl/relstore.hpp"

#ifndef FOCL_BIN
#define FOCL_BIN "./focl"
#endif

using namespace focl;

namespace {

struct TempDir {
    std::string path;
    TempDir() {
        path = "/tmp/focl_cli_XXXXXX";
        REQUIRE(mkdtemp(path.data()) != nullptr);
    }
    ~TempDir() {
        if (std::system(("rm -rf " + path).c_str()) != 0) std::perror("cleanup");
    }
    std::string file(const std::string& name) const { return path + "/" + name; }
};

int run(const std::string& args, std::string* out = nullptr) {
    std::string cmd = std::string(FOCL_BIN) + " " + args;
    if (out) {
        cmd += " > /tmp/focl_cli_out.txt 2>&1";
        int rc = std::system(cmd.c_str());
        std::ifstream in("/tmp/focl_cli_out.txt");
        std::stringstream ss;
        ss << in.rdbuf();
        *out = ss.str();
        return WEXITSTATUS(rc);
    }
    cmd += " > /dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_CASE("precompute, learn, evalh round trip with exit codes") {
    TempDir dir;
    std::string db = dir.file("db.jsonl");
    {
        std::ofstream out(db);
        persist(campaigns::citations_fixture(), out);
    }
    write_file(dir.file("cfg.json"),
               R"({"k":1,"l":0,"q":8,"caps":{"max_count_vars":2,"max_literals":2,)"
               R"("max_summands":2,"allow_ground_factors":false,"int_pool_cap":1}})");
    write_file(dir.file("train.jsonl"),
               "{\"tuple\":[\"a1\"],\"label\":3}\n{\"tuple\":[\"a2\"],\"label\":0}\n");

    CHECK(run("precompute --db " + db + " --index " + dir.file("ix.fidx") +
              " --config " + dir.file("cfg.json")) == 0);
    CHECK(run("learn --index " + dir.file("ix.fidx") + " --train " +
              dir.file("train.jsonl") + " --out " + dir.file("hyp.json")) == 0);

    std::string out;
    CHECK(run("evalh --index " + dir.file("ix.fidx") + " --hypothesis " +
                  dir.file("hyp.json") + " --tuple a1 --tuple a2",
              &out) == 0);
    CHECK(out.find("3") != std::string::npos);

    // learner reject maps to exit code 4
    write_file(dir.file("bad.jsonl"),
               "{\"tuple\":[\"a1\"],\"label\":0}\n{\"tuple\":[\"a1\"],\"label\":1}\n");
    std::string msg;
    CHECK(run("learn --index " + dir.file("ix.fidx") + " --train " + dir.file("bad.jsonl") +
                  " --out " + dir.file("h2.json"),
              &msg) == 4);
    CHECK(msg.find("contradictory") != std::string::npos);

    // malformed input maps to exit code 3, usage to 2
    write_file(dir.file("broken.jsonl"), "not json\n");
    CHECK(run("learn --index " + dir.file("ix.fidx") + " --train " +
              dir.file("broken.jsonl") + " --out " + dir.file("h3.json")) == 3);
    CHECK(run("nonsense") == 2);
    CHECK(run("learn --index missing.fidx") == 2);  // missing required flag
}

TEST_CASE("eval prints term and formula values") {
    TempDir dir;
    std::string db = dir.file("db.jsonl");
    {
        std::ofstream out(db);
        persist(campaigns::citations_fixture(), out);
    }
    std::string out;
    CHECK(run("eval --db " + db +
                  " --term \"#(z1,z2).(Author(x,z1) & Citation(z2,z1))\" --at x=a1",
              &out) == 0);
    CHECK(out == "3\n");
    CHECK(run("eval --db " + db + " --term \"Pleq(1, #(z).(Author(x,z)))\" --at x=a2",
              &out) == 0);
    CHECK(out == "true\n");
    CHECK(run("eval --db " + db + " --term \"dist<=2(x, y)\" --at x=a1 --at y=p3",
              &out) == 0);
    CHECK(out == "true\n");
    CHECK(run("eval --db " + db + " --term \"#(z).(\" --at x=a1") == 3);
}

TEST_CASE("check and bench smoke") {
    std::string out;
    CHECK(run("check --seed 3 --trials 120", &out) == 0);
    CHECK(out.find("evaluator-vs-oracle: pass") != std::string::npos);
    CHECK(run("bench --sizes 60,120 --degree 3 --examples 4 --seed 5", &out) == 0);
    CHECK(out.find("phase") != std::string::npos);
    CHECK(out.find("learn") != std::string::npos);
}
