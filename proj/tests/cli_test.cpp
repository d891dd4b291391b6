#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "npr/clouds.hpp"
#include "npr/image.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_npr;  // path to the CLI binary under test

int run(const std::string& args) {
  const std::string cmd = g_npr + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::set<std::string> list_dir(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
  return names;
}

}  // namespace

TEST_CASE("cli end to end") {
  const fs::path work = fs::temp_directory_path() / "npr_cli_test";
  fs::remove_all(work);
  fs::create_directories(work);
  const std::string w = work.string();

  SUBCASE("usage errors exit 2") {
    CHECK(run("") == 2);
    CHECK(run("--bogus-flag") == 2);
    CHECK(run("synth") == 2);                       // missing --out
    CHECK(run("render --out " + w + "/x") == 2);    // missing required flags
  }

  SUBCASE("missing input exits 3") {
    CHECK(run("ingest --scene " + w + "/nope.json --out " + w + "/c") == 3);
  }

  SUBCASE("pipeline") {
    const std::set<std::string> before = list_dir(work);
    REQUIRE(run("synth --out " + w + "/s --seed 5 --steps 2 --res 24") == 0);
    CHECK(fs::exists(work / "s/scene.json"));
    CHECK(fs::exists(work / "s/weights.tnw"));
    CHECK(fs::exists(work / "s/config.toml"));
    CHECK(fs::exists(work / "s/gt/step000.ppm"));

    REQUIRE(run("ingest --scene " + w + "/s/scene.json --out " + w + "/c") == 0);
    const npr::PointCloudB points = npr::load_point_cloud(w + "/c/points.npcd");
    CHECK(points.size() == 2 * 12 * 24 * 24);
    const npr::FeatureCloudM features = npr::load_feature_cloud(w + "/c/features.npcd");
    CHECK(features.size() > 0);

    // render at a reduced resolution for speed
    {
      std::ifstream src(w + "/s/config.toml");
      std::ofstream dst(w + "/small.toml");
      std::string line;
      while (std::getline(src, line)) {
        if (line.rfind("width", 0) == 0) line = "width = 64";
        if (line.rfind("height", 0) == 0) line = "height = 64";
        dst << line << "\n";
      }
    }
    const std::string common = " --scene " + w + "/s/scene.json --cloud " + w +
                               "/c --weights " + w + "/s/weights.tnw --config " + w +
                               "/small.toml";
    REQUIRE(run("render" + common + " --pose 0 --mode splat --out " + w + "/r1") == 0);
    CHECK(fs::exists(work / "r1/image.ppm"));
    CHECK(fs::exists(work / "r1/gt.ppm"));
    CHECK(fs::exists(work / "r1/manifest.json"));
    CHECK(fs::exists(work / "r1/losses.json"));
    const npr::Image img = npr::read_ppm(w + "/r1/image.ppm");
    CHECK(img.width == 64);

    REQUIRE(run("render" + common + " --pose 0 --mode volume --out " + w + "/r2") == 0);
    const npr::Image fmap = npr::read_fmap(w + "/r2/fmap.bin");
    CHECK(fmap.height == 14);
    CHECK(fmap.width == 14);
    CHECK(fmap.channels == 16);

    // volume mode over an empty feature cloud renders an all-zero map
    fs::create_directories(work / "empty");
    npr::save_cloud(w + "/empty/points.npcd", npr::PointCloudB{});
    npr::FeatureCloudM no_features;
    no_features.dim = 16;
    npr::save_cloud(w + "/empty/features.npcd", no_features);
    {
      std::ofstream pose0(w + "/pose0.json");
      pose0 << R"({"q":[1,0,0,0],"t":[3.0,1.5,2.0]})";
    }
    REQUIRE(run("render --cloud " + w + "/empty --weights " + w + "/s/weights.tnw --pose " + w +
                "/pose0.json --mode volume --out " + w + "/r_empty --config " + w +
                "/small.toml") == 0);
    const npr::Image zero_map = npr::read_fmap(w + "/r_empty/fmap.bin");
    for (float v : zero_map.data) CHECK(v == 0.0f);

    REQUIRE(run("render" + common + " --pose 1 --mode stu --out " + w + "/r3") == 0);
    CHECK(fs::exists(work / "r3/embedding.json"));
    std::ifstream emb(w + "/r3/embedding.json");
    std::string text((std::istreambuf_iterator<char>(emb)), {});
    CHECK(text.find("\"dim\":768") != std::string::npos);

    // a pose json file is also accepted
    {
      std::ofstream pose(w + "/pose.json");
      pose << R"({"q":[1,0,0,0],"t":[3.0,1.5,2.5]})";
    }
    REQUIRE(run("render" + common + " --pose " + w + "/pose.json --mode splat --out " + w +
                "/r4") == 0);

    // corrupt weights fail cleanly
    {
      std::ofstream bad(w + "/bad.tnw", std::ios::binary);
      bad << "GARBAGEGARBAGE";
    }
    CHECK(run("render --scene " + w + "/s/scene.json --weights " + w +
              "/bad.tnw --pose 0 --mode splat --out " + w + "/r5") == 3);

    // nothing escaped the chosen output directories
    std::set<std::string> after = list_dir(work);
    for (const std::string& name : {"s", "c", "r1", "r2", "r3", "r4", "small.toml",
                                    "pose.json", "pose0.json", "bad.tnw", "r5", "empty",
                                    "r_empty"}) {
      after.erase(name);
    }
    CHECK(after == before);
  }

  fs::remove_all(work);
}

int main(int argc, char** argv) {
  if (argc > 1 && argv[argc - 1][0] != '-') {
    g_npr = argv[argc - 1];
    --argc;
  }
  if (g_npr.empty()) {
    std::fprintf(stderr, "usage: cli_test [doctest args] <path-to-npr>\n");
    return 1;
  }
  return doctest::Context(argc, argv).run();
}
