#include "lsepose/bench.hpp"
#include "lsepose/oracle.hpp"
#include "lsepose/pipeline.hpp"
#include "lsepose/procgen.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace lsepose;

namespace {

py::array_t<std::uint8_t> mask_to_numpy(const Mask& m) {
  py::array_t<std::uint8_t> out({m.height, m.width});
  std::memcpy(out.mutable_data(), m.data.data(), m.data.size());
  return out;
}

Mask mask_from_numpy(const py::array_t<std::uint8_t>& arr) {
  if (arr.ndim() != 2) throw py::value_error("mask must be a 2D uint8 array");
  Mask m(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
  auto r = arr.unchecked<2>();
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) m.set(x, y, r(y, x) != 0);
  return m;
}

py::array_t<float> lse_map_to_numpy(const LseMap& map) {
  py::array_t<float> out({map.height, map.width, map.channels});
  std::memcpy(out.mutable_data(), map.data.data(), map.data.size() * sizeof(float));
  return out;
}

py::array_t<float> depth_to_numpy(const SceneMaps& maps) {
  py::array_t<float> out({maps.height, maps.width});
  std::memcpy(out.mutable_data(), maps.depth.data(), maps.depth.size() * sizeof(float));
  return out;
}

std::vector<Correspondence2d3d> zip_correspondences(
    const Eigen::Ref<const Eigen::MatrixX2d>& pixels,
    const Eigen::Ref<const Eigen::MatrixX3d>& points) {
  if (pixels.rows() != points.rows())
    throw py::value_error("pixels and points must have the same length");
  std::vector<Correspondence2d3d> corr(pixels.rows());
  for (Eigen::Index i = 0; i < pixels.rows(); ++i) {
    corr[i].pixel = pixels.row(i);
    corr[i].point = points.row(i);
  }
  return corr;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "geometric 6D pose pipeline on local surface embeddings";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DegeneracyError>(m, "DegeneracyError");
  py::register_exception<DegenerateFrameError>(m, "DegenerateFrameError");

  // ---- geometry ----------------------------------------------------------
  py::class_<PointSample>(m, "PointSample")
      .def(py::init<>())
      .def_readwrite("position", &PointSample::position)
      .def_readwrite("normal", &PointSample::normal)
      .def_readwrite("triangle", &PointSample::triangle);

  py::class_<SurfaceMesh>(m, "SurfaceMesh")
      .def(py::init<>())
      .def_property_readonly("vertex_count",
                             [](const SurfaceMesh& s) { return s.vertices.size(); })
      .def_property_readonly("triangle_count",
                             [](const SurfaceMesh& s) { return s.triangles.size(); })
      .def_readonly("dropped_degenerate", &SurfaceMesh::dropped_degenerate)
      .def("vertices",
           [](const SurfaceMesh& s) {
             Eigen::MatrixX3d v(s.vertices.size(), 3);
             for (std::size_t i = 0; i < s.vertices.size(); ++i) v.row(i) = s.vertices[i];
             return v;
           })
      .def("triangles", [](const SurfaceMesh& s) {
        Eigen::MatrixX3i t(s.triangles.size(), 3);
        for (std::size_t i = 0; i < s.triangles.size(); ++i)
          t.row(i) << s.triangles[i][0], s.triangles[i][1], s.triangles[i][2];
        return t;
      });

  m.def("load_mesh", py::overload_cast<const std::filesystem::path&>(&load_mesh));
  m.def("make_box", &make_box);
  m.def("make_lblock", &make_lblock, py::arg("scale") = 1.0);
  m.def("make_wedge", &make_wedge, py::arg("scale") = 1.0);
  m.def("make_cross_prism", &make_cross_prism, py::arg("scale") = 1.0);
  m.def("make_cylinder", &make_cylinder);
  m.def("make_uv_sphere", &make_uv_sphere);
  m.def("sample_surface", &sample_surface, py::arg("mesh"), py::arg("count"), py::arg("seed"));
  m.def("radius_neighbors", &radius_neighbors);
  m.def("model_diameter", &model_diameter);

  // ---- embeddings ----------------------------------------------------------
  py::class_<LseParams>(m, "LseParams")
      .def(py::init<>())
      .def_readwrite("radius_cm", &LseParams::radius_cm)
      .def_readwrite("sigma_cm", &LseParams::sigma_cm)
      .def_readwrite("unit_scale_to_cm", &LseParams::unit_scale_to_cm)
      .def_readwrite("epsilon_sv", &LseParams::epsilon_sv)
      .def_readwrite("exponents", &LseParams::exponents)
      .def_property_readonly("dim", &LseParams::dim);

  py::class_<LocalFrame>(m, "LocalFrame")
      .def_readonly("rotation", &LocalFrame::rotation)
      .def_readonly("stable", &LocalFrame::stable)
      .def_readonly("singular_values", &LocalFrame::singular_values);

  py::class_<LseVector>(m, "LseVector")
      .def_readonly("values", &LseVector::values)
      .def_readonly("normalized", &LseVector::normalized);

  m.def("local_frame", &local_frame, py::arg("neighbors"), py::arg("center"), py::arg("normal"),
        py::arg("epsilon_sv") = 1e-6);
  m.def("lse_raw", &lse_raw);

  py::class_<KnnHit>(m, "KnnHit")
      .def_readonly("entry", &KnnHit::entry)
      .def_readonly("distance", &KnnHit::distance);

  py::class_<LseIndex>(m, "LseIndex")
      .def_property_readonly("model_id", &LseIndex::model_id)
      .def_property_readonly("size", &LseIndex::size)
      .def_property_readonly("degenerate_skipped", &LseIndex::degenerate_skipped)
      .def("sample", &LseIndex::sample, py::return_value_policy::copy)
      .def("vector", &LseIndex::vector)
      .def("stable", &LseIndex::stable)
      .def("knn",
           [](const LseIndex& index, const Eigen::VectorXd& query, int k) {
             std::vector<KnnHit> hits;
             index.knn(query, k, hits);
             return hits;
           })
      .def("knn_linear", [](const LseIndex& index, const Eigen::VectorXd& query, int k) {
        std::vector<KnnHit> hits;
        index.knn_linear(query, k, hits);
        return hits;
      });

  m.def("build_index", &build_index, py::arg("samples"), py::arg("params"),
        py::arg("model_id") = std::string(), py::arg("threads") = 1);
  m.def("save_index", &save_index);
  m.def("load_index", &load_index);

  // ---- camera and rendering -------------------------------------------------
  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init<>())
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy)
      .def_readwrite("width", &CameraIntrinsics::width)
      .def_readwrite("height", &CameraIntrinsics::height);

  py::class_<Pose>(m, "Pose")
      .def(py::init<>())
      .def(py::init([](const Mat3& r, const Vec3& t) { return Pose{r, t}; }))
      .def_readwrite("rotation", &Pose::rotation)
      .def_readwrite("translation", &Pose::translation)
      .def("apply", &Pose::apply)
      .def("inverse", &Pose::inverse)
      .def("compose", &Pose::compose);

  m.def("project", &project);
  m.def("backproject", &backproject);

  py::class_<SceneMaps>(m, "SceneMaps")
      .def(py::init<int, int>())
      .def_readonly("width", &SceneMaps::width)
      .def_readonly("height", &SceneMaps::height)
      .def("depth", &depth_to_numpy)
      .def("instance", [](const SceneMaps& s) {
        py::array_t<std::int32_t> out({s.height, s.width});
        std::memcpy(out.mutable_data(), s.instance.data(),
                    s.instance.size() * sizeof(std::int32_t));
        return out;
      });

  m.def(
      "render",
      [](const SurfaceMesh& mesh, const Pose& pose, const CameraIntrinsics& cam, int instance,
         SceneMaps& target) { render(mesh, pose, cam, instance, target); },
      py::arg("mesh"), py::arg("pose"), py::arg("camera"), py::arg("instance"),
      py::arg("target"));

  // ---- pnp / refinement ------------------------------------------------------
  m.def(
      "solve_pnp",
      [](const Eigen::MatrixX2d& pixels, const Eigen::MatrixX3d& points,
         const CameraIntrinsics& cam) { return solve_pnp(zip_correspondences(pixels, points), cam); },
      py::arg("pixels"), py::arg("points"), py::arg("camera"));
  m.def(
      "refine_pose",
      [](const Pose& initial, const Eigen::MatrixX2d& pixels, const Eigen::MatrixX3d& points,
         const CameraIntrinsics& cam) {
        return refine_pose(initial, zip_correspondences(pixels, points), cam);
      },
      py::arg("initial"), py::arg("pixels"), py::arg("points"), py::arg("camera"));
  m.def(
      "reprojection_cost",
      [](const Pose& pose, const Eigen::MatrixX2d& pixels, const Eigen::MatrixX3d& points,
         const CameraIntrinsics& cam) {
        return reprojection_cost(pose, zip_correspondences(pixels, points), cam);
      },
      py::arg("pose"), py::arg("pixels"), py::arg("points"), py::arg("camera"));

  // ---- scenes and the pipeline ------------------------------------------------
  py::class_<SceneNoise>(m, "SceneNoise")
      .def(py::init<>())
      .def_readwrite("lse_sd", &SceneNoise::lse_sd)
      .def_readwrite("mask_morph_px", &SceneNoise::mask_morph_px)
      .def_readwrite("dropout", &SceneNoise::dropout);

  py::class_<ObjectPlacement>(m, "ObjectPlacement")
      .def(py::init([](const std::string& id, const Pose& pose) {
        return ObjectPlacement{id, pose};
      }))
      .def_readwrite("model_id", &ObjectPlacement::model_id)
      .def_readwrite("pose", &ObjectPlacement::pose);

  py::class_<SceneSpec>(m, "SceneSpec")
      .def(py::init<>())
      .def_readwrite("name", &SceneSpec::name)
      .def_readwrite("objects", &SceneSpec::objects)
      .def_readwrite("camera", &SceneSpec::camera)
      .def_readwrite("noise", &SceneSpec::noise)
      .def_readwrite("seed", &SceneSpec::seed);

  py::class_<GroundTruthObject>(m, "GroundTruthObject")
      .def_readonly("model_id", &GroundTruthObject::model_id)
      .def_readonly("pose", &GroundTruthObject::pose)
      .def_readonly("instance_id", &GroundTruthObject::instance_id);

  py::class_<SceneBundle>(m, "SceneBundle")
      .def_readonly("camera", &SceneBundle::camera)
      .def_readonly("ground_truth", &SceneBundle::ground_truth)
      .def_property_readonly("mask_count",
                             [](const SceneBundle& b) { return b.masks.size(); })
      .def("mask", [](const SceneBundle& b, std::size_t i) { return mask_to_numpy(b.masks.at(i)); })
      .def("scene_depth", [](const SceneBundle& b) { return depth_to_numpy(b.maps); })
      .def("lse_map", [](const SceneBundle& b) { return lse_map_to_numpy(b.lse); });

  m.def(
      "render_scene",
      [](const SceneSpec& spec, const std::map<std::string, const SurfaceMesh*>& meshes,
         const std::map<std::string, const LseIndex*>& indices) {
        return render_scene(spec, meshes, indices);
      },
      py::arg("spec"), py::arg("meshes"), py::arg("indices"), py::keep_alive<0, 2>(),
      py::keep_alive<0, 3>());
  m.def("write_scene", &write_scene);
  m.def("read_scene", &read_scene);

  py::class_<RansacConfig>(m, "RansacConfig")
      .def(py::init<>())
      .def_readwrite("n_iter", &RansacConfig::n_iter)
      .def_readwrite("sample_min", &RansacConfig::sample_min)
      .def_readwrite("sample_max", &RansacConfig::sample_max)
      .def_readwrite("s_min", &RansacConfig::s_min)
      .def_readwrite("inlier_threshold_px", &RansacConfig::inlier_threshold_px)
      .def_readwrite("alpha", &RansacConfig::alpha)
      .def_readwrite("seed", &RansacConfig::seed);

  py::class_<VsdParams>(m, "VsdParams")
      .def(py::init<>())
      .def_readwrite("tau_mm", &VsdParams::tau_mm)
      .def_readwrite("error_threshold", &VsdParams::error_threshold)
      .def_readwrite("min_visibility", &VsdParams::min_visibility)
      .def_readwrite("unit_scale_to_cm", &VsdParams::unit_scale_to_cm);

  py::class_<PoseHypothesis>(m, "PoseHypothesis")
      .def_readonly("pose", &PoseHypothesis::pose)
      .def_readonly("score", &PoseHypothesis::score)
      .def_readonly("model_id", &PoseHypothesis::model_id)
      .def_readonly("mask_id", &PoseHypothesis::mask_id)
      .def_property_readonly("inlier_count",
                             [](const PoseHypothesis& h) { return h.inliers.size(); });

  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init(&default_config))
      .def_readwrite("seed", &PipelineConfig::seed)
      .def_readwrite("unit_scale_to_cm", &PipelineConfig::unit_scale_to_cm)
      .def_readwrite("sample_count", &PipelineConfig::sample_count)
      .def_readwrite("lse", &PipelineConfig::lse)
      .def_readwrite("suppression_radius_cm", &PipelineConfig::suppression_radius_cm)
      .def_readwrite("matching_k", &PipelineConfig::matching_k)
      .def_readwrite("discriminative_threshold", &PipelineConfig::discriminative_threshold)
      .def_readwrite("ransac", &PipelineConfig::ransac)
      .def_readwrite("vsd", &PipelineConfig::vsd);

  py::class_<LoadedModel>(m, "LoadedModel")
      .def(py::init([](const std::string& id, bool symmetric, const SurfaceMesh& mesh,
                       const LseIndex& index) {
        LoadedModel m2;
        m2.id = id;
        m2.symmetric = symmetric;
        m2.mesh = mesh;
        m2.index = index;
        m2.diameter = model_diameter(index.samples());
        return m2;
      }))
      .def_readonly("id", &LoadedModel::id)
      .def_readonly("symmetric", &LoadedModel::symmetric)
      .def_readonly("diameter", &LoadedModel::diameter);

  py::class_<ObjectRecord>(m, "ObjectRecord")
      .def_readonly("scene_id", &ObjectRecord::scene_id)
      .def_readonly("object_id", &ObjectRecord::object_id)
      .def_readonly("model_id", &ObjectRecord::model_id)
      .def_readonly("detected", &ObjectRecord::detected)
      .def_readonly("add", &ObjectRecord::add)
      .def_readonly("adi", &ObjectRecord::adi)
      .def_readonly("add_correct", &ObjectRecord::add_correct)
      .def_readonly("vsd", &ObjectRecord::vsd)
      .def_readonly("vsd_correct", &ObjectRecord::vsd_correct)
      .def_readonly("visibility", &ObjectRecord::visibility);

  py::class_<MetricReport>(m, "MetricReport")
      .def_readonly("records", &MetricReport::records)
      .def_readonly("add_recall", &MetricReport::add_recall)
      .def_readonly("vsd_recall", &MetricReport::vsd_recall)
      .def_readonly("evaluated", &MetricReport::evaluated);

  m.def("estimate_scene", &estimate_scene, py::arg("scene"), py::arg("models"), py::arg("config"),
        py::arg("threads") = 1);
  m.def("evaluate_scene", &evaluate_scene, py::arg("scene_id"), py::arg("scene"),
        py::arg("models"), py::arg("hypotheses"), py::arg("config"));
  m.def("aggregate", &aggregate);

  m.def("add_error", &add_error);
  m.def("adi_error", &adi_error);
  m.def("add_correct", &add_correct, py::arg("error"), py::arg("diameter"),
        py::arg("symmetric_uses_adi_error") = false);
}
