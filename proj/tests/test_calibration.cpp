#include "touchroller/calibration.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "touchroller/error.hpp"
#include "touchroller/simulator.hpp"

using namespace touchroller;

namespace {

std::vector<PixelPoint> project_all(const std::vector<SurfacePoint>& pts, const CameraIntrinsics& k,
                                    const ExtrinsicPose& pose) {
  std::vector<PixelPoint> out;
  for (const auto& p : pts) out.push_back(project(p, k, pose).pixel);
  return out;
}

GrayImage grid_frame(const ExtrinsicPose& pose, int index = 0, double noise = 0.0,
                     std::vector<int> masked = {}) {
  SimScene scene;
  scene.kind = SceneKind::HemisphereGrid;
  scene.masked_hemispheres = std::move(masked);
  RenderParams params;
  params.supersample = 4;
  params.noise_sigma = noise;
  params.seed = 17;
  const CylinderModel cyl;
  return render_frame(scene, RollState::at(0.0, cyl, pose, index), CameraIntrinsics{}, cyl, params).pixels;
}

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(SolvePnp, RecoversPoseFromExactCorrespondences) {
  const CameraIntrinsics k;
  const auto obj = grid_object_points(GridSpec{}, CylinderModel{});
  const ExtrinsicPose truth{0.05, 1.0};
  const auto est = solve_pnp(obj, project_all(obj, k, truth), k, {});
  EXPECT_NEAR(est.theta, 0.05, 1e-6);
  EXPECT_NEAR(est.d, 1.0, 1e-6);
  EXPECT_LT(est.reprojection_rmse, 1e-6);
  EXPECT_EQ(est.n_points, 10);
}

TEST(SolvePnp, IdentityNeedsNoIterations) {
  const CameraIntrinsics k;
  const auto obj = grid_object_points(GridSpec{}, CylinderModel{});
  const auto est = solve_pnp(obj, project_all(obj, k, {}), k, {});
  EXPECT_EQ(est.iterations, 0);
  EXPECT_EQ(est.theta, 0.0);
  EXPECT_EQ(est.d, 0.0);
  EXPECT_LT(est.reprojection_rmse, 1e-12);
}

TEST(SolvePnp, FullModelAgrees) {
  const CameraIntrinsics k;
  const auto obj = grid_object_points(GridSpec{}, CylinderModel{});
  const ExtrinsicPose truth{0.05, 1.0};
  PnpOptions opts;
  opts.model = PnpModel::Full;
  const auto est = solve_pnp(obj, project_all(obj, k, truth), k, {}, opts);
  EXPECT_NEAR(est.theta, 0.05, 1e-6);
  EXPECT_NEAR(est.d, 1.0, 1e-6);
}

TEST(SolvePnp, NoisyCorrespondencesMonteCarlo) {
  const CameraIntrinsics k;
  const auto obj = grid_object_points(GridSpec{}, CylinderModel{});
  const ExtrinsicPose truth{0.05, 1.0};
  const auto clean = project_all(obj, k, truth);
  for (unsigned seed = 0; seed < 50; ++seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.3);
    auto px = clean;
    for (auto& p : px) {
      p.u += noise(rng);
      p.v += noise(rng);
    }
    const auto est = solve_pnp(obj, px, k, {});
    EXPECT_LT(std::abs(est.theta - truth.theta), 5e-3) << seed;
    EXPECT_LT(std::abs(est.d - truth.d), 0.3) << seed;
    // Optimality on the two-parameter family.
    EXPECT_LE(est.reprojection_rmse, reprojection_rmse(obj, px, k, truth) + 1e-9);
  }
}

TEST(SolvePnp, TooFewPoints) {
  const CameraIntrinsics k;
  auto obj = grid_object_points(GridSpec{}, CylinderModel{});
  obj.resize(3);
  EXPECT_EQ(code_of([&] { solve_pnp(obj, project_all(obj, k, {}), k, {}); }), ErrorCode::InsufficientPoints);
}

TEST(DetectGrid, CentersMatchSimulatorTruth) {
  const CameraIntrinsics k;
  const CylinderModel cyl;
  SimScene scene;
  scene.kind = SceneKind::HemisphereGrid;
  RenderParams params;
  params.supersample = 4;
  const auto frame = render_frame(scene, RollState::at(0.0, cyl, {}), k, cyl, params);
  const auto centers = detect_grid_centers(frame.pixels, GridSpec{});
  ASSERT_EQ(centers.size(), frame.truth.contacts.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    EXPECT_NEAR(centers[i].u, frame.truth.contacts[i].pixel.u, 0.5) << i;
    EXPECT_NEAR(centers[i].v, frame.truth.contacts[i].pixel.v, 0.5) << i;
  }
}

TEST(DetectGrid, BlankFrameIsIncomplete) {
  EXPECT_EQ(code_of([] { detect_grid_centers(GrayImage(640, 480, 20), GridSpec{}); }),
            ErrorCode::GridIncomplete);
}

TEST(DetectGrid, MaskedHemisphereIsIncomplete) {
  const auto frame = grid_frame({}, 0, 0.0, {4});
  try {
    detect_grid_centers(frame, GridSpec{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridIncomplete);
    EXPECT_NE(std::string(e.what()).find("found 9"), std::string::npos);
  }
}

TEST(DetectGrid, OrderingInvariantToIntensityScale) {
  const auto frame = grid_frame({0.05, 1.0});
  GrayImage dim(frame.width(), frame.height());
  for (std::size_t i = 0; i < frame.size(); ++i)
    dim.pixels()[i] = static_cast<std::uint8_t>(frame.pixels()[i] / 2);
  const auto a = detect_grid_centers(frame, GridSpec{});
  const auto b = detect_grid_centers(dim, GridSpec{});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].u, b[i].u, 0.05);
    EXPECT_NEAR(a[i].v, b[i].v, 0.05);
  }
}

TEST(Calibrate, SweepRecoversEachPose) {
  for (double theta : {0.04, 0.05, 0.06}) {
    std::vector<GrayImage> frames;
    for (int i = 0; i < 3; ++i) frames.push_back(grid_frame({theta, 1.0}, i));
    const auto result = calibrate(frames, GridSpec{}, CameraIntrinsics{}, CylinderModel{});
    EXPECT_NEAR(result.pose.theta, theta, 1e-4);
    EXPECT_NEAR(result.pose.d, 1.0, 0.05);
    EXPECT_EQ(result.n_valid, 3);
  }
}

TEST(Calibrate, IdenticalFramesAverageToSingleEstimate) {
  const auto frame = grid_frame({0.05, 1.0});
  const std::vector<GrayImage> one{frame};
  const std::vector<GrayImage> five(5, frame);
  const auto a = calibrate(one, GridSpec{}, CameraIntrinsics{}, CylinderModel{});
  const auto b = calibrate(five, GridSpec{}, CameraIntrinsics{}, CylinderModel{});
  EXPECT_DOUBLE_EQ(a.pose.theta, b.pose.theta);
  EXPECT_DOUBLE_EQ(a.pose.d, b.pose.d);
  EXPECT_DOUBLE_EQ(b.theta_std, 0.0);
}

TEST(Calibrate, InvalidFramesAreExcludedAndCounted) {
  std::vector<GrayImage> frames{grid_frame({0.05, 1.0}, 0), GrayImage(640, 480, 20),
                                grid_frame({0.05, 1.0}, 1, 0.0, {2}), grid_frame({0.05, 1.0}, 2)};
  const auto result = calibrate(frames, GridSpec{}, CameraIntrinsics{}, CylinderModel{});
  EXPECT_EQ(result.n_valid, 2);
  EXPECT_EQ(result.n_invalid, 2);
  EXPECT_FALSE(result.frames[1].estimate.has_value());
  EXPECT_FALSE(result.frames[1].error.empty());
  EXPECT_NEAR(result.pose.theta, 0.05, 1e-4);
}

TEST(Calibrate, PermutationInvariant) {
  std::vector<GrayImage> frames;
  for (int i = 0; i < 6; ++i) frames.push_back(grid_frame({0.05, 1.0}, i, 4.0));
  const auto a = calibrate(frames, GridSpec{}, CameraIntrinsics{}, CylinderModel{});
  std::mt19937 rng(1);
  for (int trial = 0; trial < 3; ++trial) {
    std::ranges::shuffle(frames, rng);
    const auto b = calibrate(frames, GridSpec{}, CameraIntrinsics{}, CylinderModel{});
    EXPECT_EQ(a.pose.theta, b.pose.theta);
    EXPECT_EQ(a.pose.d, b.pose.d);
  }
}

TEST(Calibrate, NoValidFrames) {
  const std::vector<GrayImage> frames(2, GrayImage(640, 480, 20));
  EXPECT_EQ(code_of([&] { calibrate(frames, GridSpec{}, CameraIntrinsics{}, CylinderModel{}); }),
            ErrorCode::NoValidFrames);
}

TEST(Calibrate, PixelNoiseStaysWithinTolerance) {
  std::vector<GrayImage> frames;
  for (int i = 0; i < 10; ++i) frames.push_back(grid_frame({0.05, 1.0}, i, 5.0));
  const auto result = calibrate(frames, GridSpec{}, CameraIntrinsics{}, CylinderModel{});
  EXPECT_NEAR(result.pose.theta, 0.05, 1e-3);
  EXPECT_NEAR(result.pose.d, 1.0, 0.05);
  EXPECT_GT(result.theta_std, 0.0);
}
