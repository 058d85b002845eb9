#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include "cortical/image_io.hpp"
#include "cortical/synthetic.hpp"
#include "cortical/volume_io.hpp"

using namespace cortical;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
protected:
  void SetUp() override
  {
    dir_ = fs::temp_directory_path() /
           ("cortical_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Invocation run(const std::string& args) const
  {
    const std::string out = path("stdout.txt"), err = path("stderr.txt");
    const std::string cmd = std::string(CORTICAL_INPAINT_EXE) + " " + args + " >" + out + " 2>" + err;
    const int status = std::system(cmd.c_str());
    Invocation r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read(out);
    r.err = read(err);
    return r;
  }

  static std::string read(const std::string& p)
  {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // 24 px stripes with a bar and a small bank
  std::string small_case()
  {
    const ImageGrid truth = synthetic::stripes(24, 6);
    const PixelMask mask = synthetic::bar_mask(24, 10, 3);
    save_image(synthetic::occlude(truth, mask), path("in.pgm"));
    save_image(truth, path("truth.pgm"));
    save_mask(mask, path("mask.png"));
    return "-i " + path("in.pgm") + " -m " + path("mask.png") + " -K 8 --freqs 0.6:1.4:3 -M 3";
  }

private:
  fs::path dir_;
};

} // namespace

TEST_F(Cli, HelpListsDefaults)
{
  const Invocation r = run("complete --help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--orientations"), std::string::npos);
  EXPECT_NE(r.out.find("32"), std::string::npos);
  EXPECT_NE(r.out.find("--dt"), std::string::npos);
  EXPECT_NE(r.out.find("0.1"), std::string::npos);
  EXPECT_NE(r.out.find("--stencil"), std::string::npos);
}

TEST_F(Cli, CompleteWritesImageAndReport)
{
  const std::string base = small_case();
  const Invocation r = run("complete " + base + " --tmax 0.5 -o " + path("out.png") + " --ground-truth " + path("truth.pgm") +
                    " --report " + path("report.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("out.png")));
  const auto j = nlohmann::json::parse(read(path("report.json")));
  EXPECT_EQ(j["mode"], "approximate");
  EXPECT_EQ(j["diffusion"]["iterations"], 5);
  EXPECT_TRUE(j.contains("rmse_masked"));
  EXPECT_LE(j["rmse_masked"].get<double>(), j["rmse_corrupted"].get<double>());

  // outside the mask the output equals the input byte for byte
  const ImageGrid in = load_image(path("in.pgm"));
  const ImageGrid out = load_image(path("out.png"));
  const PixelMask mask = load_mask(path("mask.png"));
  for (std::size_t q = 0; q < in.pixel_count(); ++q) {
    if (!mask.at_index(q)) EXPECT_EQ(in.values()[q], out.values()[q]);
  }
}

TEST_F(Cli, PaperLiteralStencilIsLabelled)
{
  const std::string base = small_case();
  const Invocation r = run("complete " + base + " --tmax 0.5 --mode exact --stencil paper-literal -o " + path("out.pgm") +
                    " --report " + path("report.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(read(path("report.json")));
  EXPECT_EQ(j["stencil"], "paper-literal");
  EXPECT_EQ(j["mode"], "exact");
  EXPECT_NE(r.err.find("paper-literal"), std::string::npos);
}

TEST_F(Cli, MaskMismatchIsAValidationError)
{
  small_case();
  save_mask(synthetic::bar_mask(20, 5, 3), path("small_mask.pgm"));
  const Invocation r = run("complete -i " + path("in.pgm") + " -m " + path("small_mask.pgm") + " -o " + path("o.pgm"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--mask"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("o.pgm")));
}

TEST_F(Cli, MissingRequiredFlagAndBadValues)
{
  EXPECT_EQ(run("complete -m x.png").code, 1);
  const std::string base = small_case();
  EXPECT_EQ(run("complete " + base + " --dt -1").code, 1);
  EXPECT_EQ(run("complete " + base + " --freqs 2:1:3").code, 1);
  EXPECT_EQ(run("complete " + base + " --mode fancy").code, 1);
  EXPECT_EQ(run("bogus").code, 1);
}

TEST_F(Cli, DivergenceIsANumericalError)
{
  const std::string base = small_case();
  const Invocation r = run("complete " + base + " --dt 1e6 --tmax 1e9 --tol 0 -o " + path("o.pgm"));
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_NE(r.err.find("iteration"), std::string::npos) << r.err;
}

TEST_F(Cli, LiftInvertRoundTrip)
{
  const ImageGrid img = synthetic::weave(32);
  save_image(img, path("w.pgm"));
  Invocation r = run("lift -i " + path("w.pgm") + " -o " + path("w.crtx") + " -K 8 --freqs 0.5:2.5:6 -M 3");
  ASSERT_EQ(r.code, 0) << r.err;
  const ResponseVolume v = load_volume(path("w.crtx"));
  EXPECT_EQ(v.size(), 32u);
  EXPECT_EQ(v.K(), 8);
  EXPECT_EQ(v.L(), 6);
  EXPECT_EQ(v.M(), 3);

  r = run("invert -v " + path("w.crtx") + " -o " + path("back.pgm") + " --reference " + path("w.pgm"));
  ASSERT_EQ(r.code, 0) << r.err;
  const ImageGrid back = load_image(path("back.pgm"));
  PixelMask interior(32);
  for (std::size_t i = 6; i < 26; ++i) {
    for (std::size_t j = 6; j < 26; ++j) interior.set(i, j);
  }
  const ImageGrid orig = load_image(path("w.pgm"));
  EXPECT_LT(rmse_region(back, orig, interior), 0.05);

  EXPECT_EQ(run("invert -v " + path("nope.crtx") + " -o " + path("x.pgm")).code, 1);
  std::ofstream(path("bad.crtx")) << "CRTXgarbage";
  EXPECT_EQ(run("invert -v " + path("bad.crtx") + " -o " + path("x.pgm")).code, 1);
}

TEST_F(Cli, CurvesWritesOneCsvPerCoefficient)
{
  const Invocation r = run("curves --start 0,0,0,1,0 --family x1x2 --coeffs -1,0,1 --step 0.01 --duration 1 -o " +
                    path("fan"));
  ASSERT_EQ(r.code, 0) << r.err;
  for (int i = 0; i < 3; ++i) {
    const std::string csv = read(path("fan_" + std::to_string(i) + ".csv"));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x,y,theta,f,s");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 102);
  }
  EXPECT_EQ(run("curves --start 0,0,0,-1,0 --coeffs 1 -o " + path("bad")).code, 1);
}
