// SPDX-License-Identifier: Apache-2.0
#include "ufdt/pipeline.hpp"

#include "ufdt/io.hpp"
#include "ufdt/parallel.hpp"
#include "ufdt/skeleton.hpp"
#include "ufdt/stats.hpp"

#include <cstdlib>
#include <filesystem>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace ufdt::pipeline {

namespace fs = std::filesystem;

int stage_exit_code(Stage s) {
  switch (s) {
    case Stage::phantom: return exit_code::phantom;
    case Stage::scan: return exit_code::scan;
    case Stage::reconstruct: return exit_code::reconstruct;
    case Stage::quantify: return exit_code::quantify;
    case Stage::dceus: return exit_code::dceus;
    case Stage::report: return exit_code::report;
    case Stage::all: return exit_code::report;
  }
  return exit_code::report;
}

Stage parse_stage(const std::string& name) {
  if (name == "phantom") return Stage::phantom;
  if (name == "scan") return Stage::scan;
  if (name == "reconstruct") return Stage::reconstruct;
  if (name == "quantify") return Stage::quantify;
  if (name == "dceus") return Stage::dceus;
  if (name == "report") return Stage::report;
  if (name == "all") return Stage::all;
  throw StageError(exit_code::config, "unknown stage '" + name + "'");
}

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::phantom: return "phantom";
    case Stage::scan: return "scan";
    case Stage::reconstruct: return "reconstruct";
    case Stage::quantify: return "quantify";
    case Stage::dceus: return "dceus";
    case Stage::report: return "report";
    case Stage::all: return "all";
  }
  return "?";
}

ScanGeometry PipelineConfig::scan_geometry() const {
  const int nx = 2 * static_cast<int>(std::lround(slice.x_half_width / slice.spacing)) + 1;
  const int nz = static_cast<int>(std::lround((slice.z_max - slice.z_min) / slice.spacing)) + 1;
  GridSpec sg = GridSpec::centered(Vec3(0.0, 0.0, 0.5 * (slice.z_min + slice.z_max)),
                                   Vec3::Constant(slice.spacing), {nx, 1, nz});
  return plan_scan(probe, n_thetas, theta_step_deg, n_y, y_step, sg);
}

GridSpec PipelineConfig::kernel_grid() const {
  return GridSpec::centered(psf_point, volume_grid.spacing, psf_dims);
}

namespace {

Vec3 vec_of(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Box box_of(const nlohmann::json& j) { return {vec_of(j.at("lo_mm")), vec_of(j.at("hi_mm"))}; }

GridSpec grid_of(const nlohmann::json& j) {
  const auto d = j.at("dims");
  const std::array<int, 3> dims{d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
  const Vec3 spacing =
      j.at("spacing_mm").is_number() ? Vec3::Constant(j.at("spacing_mm").get<double>()) : vec_of(j.at("spacing_mm"));
  if (j.contains("center_mm")) return GridSpec::centered(vec_of(j.at("center_mm")), spacing, dims);
  GridSpec g;
  g.origin = vec_of(j.at("origin_mm"));
  g.spacing = spacing;
  g.dims = dims;
  g.validate();
  return g;
}

nlohmann::json section(const nlohmann::json& j, const char* key) {
  return j.contains(key) ? j.at(key) : nlohmann::json::object();
}

}  // namespace

PipelineConfig parse_config(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    if (!j.is_object()) throw std::invalid_argument("config root must be an object");
    c.source = j;
    c.output_dir = j.value("output_dir", c.output_dir);
    c.cache_dir = j.value("cache_dir", c.cache_dir);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    if (j.contains("probe")) c.probe = j.at("probe").get<ProbeModel>();

    const auto scan = section(j, "scan");
    c.n_thetas = scan.value("n_thetas", c.n_thetas);
    c.theta_step_deg = scan.value("theta_step_deg", c.theta_step_deg);
    c.n_y = scan.value("n_y", c.n_y);
    c.y_step = scan.value("y_step_mm", c.y_step);
    const auto sg = section(scan, "slice_grid");
    c.slice.x_half_width = sg.value("x_half_width_mm", c.slice.x_half_width);
    c.slice.z_min = sg.value("z_min_mm", c.slice.z_min);
    c.slice.z_max = sg.value("z_max_mm", c.slice.z_max);
    c.slice.spacing = sg.value("spacing_mm", c.slice.spacing);

    const auto acq = section(j, "acquisition");
    c.acquisition.n_frames = acq.value("n_frames", c.acquisition.n_frames);
    c.acquisition.frame_rate = acq.value("frame_rate_hz", c.acquisition.frame_rate);
    c.acquisition.tx_angles_deg = acq.value("tx_angles_deg", c.acquisition.tx_angles_deg);
    c.acquisition.sample_rate = acq.value("sample_rate_mhz", c.acquisition.sample_rate);
    c.acquisition.noise_sd = acq.value("channel_noise_sd", c.acquisition.noise_sd);
    c.acquisition.validate();

    const auto ph = section(j, "phantom");
    if (ph.contains("tree")) c.tree = ph.at("tree").get<TreeParams>();
    c.tree.validate();
    c.tree_seed = ph.value("tree_seed", c.tree_seed);
    if (ph.contains("tumor")) c.phantom.tumor = ph.at("tumor").get<Ellipsoid>();
    if (ph.contains("tissue_region")) c.phantom.tissue_region = box_of(ph.at("tissue_region"));
    c.phantom.tissue_density = ph.value("tissue_density_per_mm3", c.phantom.tissue_density);
    c.phantom.blood_density = ph.value("blood_density_per_mm3", c.phantom.blood_density);
    c.phantom.tissue_to_blood_db = ph.value("tissue_to_blood_db", c.phantom.tissue_to_blood_db);
    c.phantom.blood_amplitude = ph.value("blood_amplitude", c.phantom.blood_amplitude);
    if (ph.contains("bolus")) c.phantom.bolus = ph.at("bolus").get<BolusParams>();

    const auto cl = section(j, "clutter");
    const std::string mode = cl.value("mode", std::string("adaptive"));
    if (mode == "fixed") {
      c.clutter.fixed_rank = cl.at("n_cut").get<int>();
    } else if (mode != "adaptive") {
      throw std::invalid_argument("clutter.mode must be 'adaptive' or 'fixed'");
    }
    c.clutter.energy_fraction = cl.value("energy_fraction", c.clutter.energy_fraction);
    c.clutter.max_rank_fraction = cl.value("max_rank_fraction", c.clutter.max_rank_fraction);

    if (!j.contains("volume")) throw std::invalid_argument("missing 'volume' grid");
    c.volume_grid = grid_of(j.at("volume"));

    const auto reg = section(j, "registration");
    c.register_volumes = reg.value("enabled", c.register_volumes);
    c.reference_index = reg.value("reference_index", c.reference_index);
    c.max_shift_voxels = reg.value("max_shift_voxels", c.max_shift_voxels);

    const auto psf = section(j, "psf");
    if (psf.contains("point_mm")) c.psf_point = vec_of(psf.at("point_mm"));
    if (psf.contains("dims")) {
      const auto& d = psf.at("dims");
      c.psf_dims = {d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()};
    }

    const auto wi = section(j, "wiener");
    c.wiener.epsilon_floor = wi.value("epsilon_floor", c.wiener.epsilon_floor);
    c.wiener.smooth_spectrum = wi.value("smooth_spectrum", c.wiener.smooth_spectrum);
    if (wi.contains("noise_variance") && !wi.at("noise_variance").is_null()) {
      c.estimate_noise = false;
      c.wiener.noise_variance = wi.at("noise_variance").get<double>();
    }
    c.wiener.validate();

    if (!j.contains("noise_region")) throw std::invalid_argument("missing 'noise_region'");
    c.noise_region = box_of(j.at("noise_region"));

    const auto q = section(j, "quantify");
    c.z_threshold = q.value("z_score", c.z_threshold);
    c.prune_spur_voxels = q.value("prune_spur_voxels", c.prune_spur_voxels);
    c.min_component_voxels = q.value("min_component_voxels", c.min_component_voxels);
    c.bin_width = q.value("bin_width_mm", c.bin_width);
    const std::string est = q.value("diameter_estimator", std::string("equivalent_cylinder"));
    if (est == "centerline_edt") {
      c.estimator = DiameterEstimator::centerline_edt;
    } else if (est != "equivalent_cylinder") {
      throw std::invalid_argument("quantify.diameter_estimator must be 'equivalent_cylinder' or 'centerline_edt'");
    }

    const auto dc = section(j, "dceus");
    if (!dc.contains("plane")) throw std::invalid_argument("missing 'dceus.plane' grid");
    c.dceus_plane = grid_of(dc.at("plane"));
    c.frame_interval = dc.value("frame_interval_s", c.frame_interval);
    c.duration = dc.value("duration_s", c.duration);
    c.lowpass_cutoff = dc.value("lowpass_cutoff_hz", c.lowpass_cutoff);
    c.toa_filtered = dc.value("toa_filtered", c.toa_filtered);
    c.phantom.validate();
    (void)c.scan_geometry();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(exit_code::config, std::string("invalid config: ") + e.what());
  }
  return c;
}

PipelineConfig load_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = io::read_json(path);
  } catch (const std::exception& e) {
    throw StageError(exit_code::config, e.what());
  }
  return parse_config(j);
}

namespace {

struct Paths {
  fs::path root;
  fs::path tree() const { return root / "phantom" / "tree.json"; }
  fs::path graph_tsv() const { return root / "phantom" / "vessel_graph.tsv"; }
  fs::path truth_histogram() const { return root / "phantom" / "ground_truth_histogram.csv"; }
  fs::path slice(std::size_t t, std::size_t y) const {
    std::ostringstream name;
    name << "slice_t" << std::setw(2) << std::setfill('0') << t << "_y" << std::setw(3) << y << ".f32";
    return root / "scan" / name.str();
  }
  fs::path scan_manifest() const { return root / "scan" / "manifest.json"; }
  fs::path fused() const { return root / "reconstruct" / "fused.f32"; }
  fs::path psf() const { return root / "reconstruct" / "psf.f32"; }
  fs::path deconvolved() const { return root / "reconstruct" / "deconvolved.f32"; }
  fs::path offsets() const { return root / "reconstruct" / "offsets.json"; }
  fs::path mask() const { return root / "quantify" / "mask.f32"; }
  fs::path skeleton_csv() const { return root / "quantify" / "skeleton.csv"; }
  fs::path segments() const { return root / "quantify" / "segments.tsv"; }
  fs::path histogram() const { return root / "quantify" / "histogram.csv"; }
  fs::path quant_summary() const { return root / "quantify" / "summary.json"; }
  fs::path toa() const { return root / "dceus" / "toa.csv"; }
  fs::path moi() const { return root / "dceus" / "moi.csv"; }
  fs::path dceus_summary() const { return root / "dceus" / "summary.csv"; }
  fs::path report() const { return root / "report.csv"; }
};

void require(const fs::path& p, int producer_code) {
  if (!fs::exists(p))
    throw StageError(producer_code, "missing input " + p.string() + " (run the producing stage first)");
}

nlohmann::json segment_json(const VesselSegment& s) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : s.centerline) pts.push_back({p[0], p[1], p[2]});
  return {{"centerline_mm", pts},
          {"length_mm", s.length},
          {"mean_diameter_mm", s.mean_diameter},
          {"flow_speed_mm_s", s.flow_speed},
          {"parent", s.parent}};
}

VesselGraph graph_from_json(const nlohmann::json& j) {
  VesselGraph g;
  for (const auto& s : j.at("segments")) {
    VesselSegment seg;
    for (const auto& p : s.at("centerline_mm")) seg.centerline.push_back(vec_of(p));
    seg.length = s.at("length_mm").get<double>();
    seg.mean_diameter = s.at("mean_diameter_mm").get<double>();
    seg.flow_speed = s.at("flow_speed_mm_s").get<double>();
    seg.parent = s.at("parent").get<int>();
    g.segments.push_back(std::move(seg));
  }
  for (const auto& c : j.at("connections")) g.connections.emplace_back(c.at(0).get<int>(), c.at(1).get<int>());
  return g;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

PhantomSpec load_phantom(const PipelineConfig& c, const Paths& paths) {
  require(paths.tree(), exit_code::phantom);
  PhantomSpec spec = c.phantom;
  spec.rng_seed = c.rng_seed;
  spec.tree = graph_from_json(io::read_json(paths.tree().string()));
  return spec;
}

void stage_phantom(const PipelineConfig& c, const Paths& paths, std::ostream& log) {
  fs::create_directories(paths.root / "phantom");
  const VesselGraph tree = generate_tree(c.tree_seed, c.tree);
  nlohmann::json j;
  j["tree_seed"] = c.tree_seed;
  j["tree_params"] = c.tree;
  j["segments"] = nlohmann::json::array();
  for (const auto& s : tree.segments) j["segments"].push_back(segment_json(s));
  j["connections"] = nlohmann::json::array();
  for (const auto& [a, b] : tree.connections) j["connections"].push_back({a, b});
  j["total_length_mm"] = tree.total_length();
  io::write_json(paths.tree().string(), j);
  {
    std::ofstream os(paths.graph_tsv());
    write_vessel_graph(os, tree);
  }
  std::ofstream os(paths.truth_histogram());
  write_histogram_csv(os, diameter_histogram(tree, c.bin_width), TumorRegion::from_volume(c.phantom.tumor.volume()));
  log << "phantom: " << tree.segments.size() << " segments, total length " << tree.total_length() << " mm\n";
}

void stage_scan(const PipelineConfig& c, const Paths& paths, int workers, std::ostream& log) {
  const PhantomSpec spec = load_phantom(c, paths);
  fs::create_directories(paths.root / "scan");
  const ScanGeometry geom = c.scan_geometry();
  const ScattererCloud cloud = seed_scatterers(spec);
  const SliceAcquisition acq(geom.slice_grid, c.probe, Pulse::from_probe(c.probe), c.acquisition);
  const std::size_t ny = geom.y_steps.size();
  nlohmann::json ranks = nlohmann::json::array();
  for (std::size_t n = 0; n < geom.pose_count(); ++n) {
    const std::size_t t = n / ny, y = n % ny;
    const IQFrameStack stack = acq.acquire(cloud, geom.pose(t, y), workers, n);
    const CasoratiMatrix m = to_casorati(stack);
    const int rank = select_rank(m, c.clutter);
    const PowerSlice slice = power_doppler(svd_filter(m, rank), stack.grid, stack.pose);
    write_power_slice(paths.slice(t, y).string(), slice);
    ranks.push_back(rank);
  }
  io::write_json(paths.scan_manifest().string(),
                 {{"geometry", geom}, {"svd_ranks", ranks}, {"scatterers", cloud.size()}});
  log << "scan: " << geom.pose_count() << " slices, " << cloud.size() << " scatterers\n";
}

void stage_reconstruct(const PipelineConfig& c, const Paths& paths, int workers, std::ostream& log) {
  const ScanGeometry geom = c.scan_geometry();
  const std::size_t ny = geom.y_steps.size();
  for (std::size_t t = 0; t < geom.thetas_deg.size(); ++t)
    for (std::size_t y = 0; y < ny; ++y) require(paths.slice(t, y), exit_code::scan);
  fs::create_directories(paths.root / "reconstruct");

  std::vector<PowerVolume> per_theta(geom.thetas_deg.size());
  parallel_for(per_theta.size(), workers, [&](std::size_t t) {
    std::vector<PowerSlice> slices;
    for (std::size_t y = 0; y < ny; ++y) slices.push_back(read_power_slice(paths.slice(t, y).string()));
    per_theta[t] = assemble_volume(slices, geom, geom.thetas_deg[t], c.volume_grid);
  });

  std::vector<Vec3> offsets(per_theta.size(), Vec3::Zero());
  if (c.register_volumes && per_theta.size() > 1) {
    try {
      offsets = register_volumes(per_theta, c.reference_index, c.max_shift_voxels);
    } catch (const std::invalid_argument& e) {
      throw StageError(exit_code::reconstruct, std::string("registration failed: ") + e.what());
    }
  }
  const PowerVolume fused = sum_volumes(per_theta, offsets);
  io::write_volume(paths.fused().string(), fused);
  nlohmann::json off = nlohmann::json::array();
  for (const auto& o : offsets) off.push_back({o[0], o[1], o[2]});
  io::write_json(paths.offsets().string(), {{"offsets_voxels", off}, {"reference_index", c.reference_index}});

  std::string cache = c.cache_dir;
  if (const char* env = std::getenv("UFDT_CACHE_DIR"); env && *env) cache = env;
  if (cache.empty()) cache = (paths.root / "cache").string();
  const PSFKernel psf = cached_psf(cache, c.probe, Pulse::from_probe(c.probe), geom, c.acquisition,
                                   c.kernel_grid(), c.psf_point, workers);
  io::write_volume(paths.psf().string(), psf.kernel);

  // Rounded to the stored precision so a rerun of later stages sees the same input.
  PowerVolume fused_f32 = fused;
  for (auto& x : fused_f32.data()) x = static_cast<float>(x);
  WienerSpec spec = c.wiener;
  if (c.estimate_noise) spec.noise_variance = estimate_noise_variance(fused_f32, c.noise_region);
  const PowerVolume out = wiener_deconvolve(fused_f32, psf, spec);
  io::write_volume(paths.deconvolved().string(), out, {{"noise_variance", spec.noise_variance}});
  log << "reconstruct: fused " << per_theta.size() << " volumes, noise variance " << spec.noise_variance << "\n";
}

void stage_quantify(const PipelineConfig& c, const Paths& paths, std::ostream& log) {
  require(paths.deconvolved(), exit_code::reconstruct);
  fs::create_directories(paths.root / "quantify");
  const PowerVolume vol = io::read_volume(paths.deconvolved().string());
  BinaryMask mask;
  try {
    mask = remove_small_components(threshold_volume(vol, c.noise_region, c.z_threshold),
                                   c.min_component_voxels);
  } catch (const std::invalid_argument& e) {
    throw StageError(exit_code::quantify, e.what());
  }
  Volume<double> mask_vol(mask.grid(), 0.0);
  for (std::size_t n = 0; n < mask.size(); ++n) mask_vol[n] = mask[n];
  io::write_volume(paths.mask().string(), mask_vol);

  const BinaryMask skel = prune_spurs(skeletonize(mask), c.prune_spur_voxels);
  {
    std::ofstream os(paths.skeleton_csv());
    os << "x_mm,y_mm,z_mm\n";
    os.precision(10);
    const auto& g = skel.grid();
    for (int i = 0; i < g.dims[0]; ++i)
      for (int j = 0; j < g.dims[1]; ++j)
        for (int k = 0; k < g.dims[2]; ++k)
          if (skel(i, j, k)) {
            const Vec3 p = g.position(i, j, k);
            os << p[0] << ',' << p[1] << ',' << p[2] << '\n';
          }
  }
  SegmentOptions opts;
  opts.estimator = c.estimator;
  const VesselGraph graph = extract_segments(skel, mask, opts);
  {
    std::ofstream os(paths.segments());
    write_vessel_graph(os, graph);
  }
  const DiameterHistogram h = diameter_histogram(graph, c.bin_width);
  const TumorRegion region = TumorRegion::from_volume(c.phantom.tumor.volume());
  {
    std::ofstream os(paths.histogram());
    write_histogram_csv(os, h, region);
  }
  nlohmann::json summary = {{"segments", graph.segments.size()},
                            {"mask_voxels", std::count(mask.data().begin(), mask.data().end(), 1)},
                            {"total_length_mm", h.total},
                            {"tumor_volume_mm3", region.volume},
                            {"tumor_radius_mm", region.radius}};
  if (h.total > 0.0) {
    const auto scaled = scale_normalizations(h, region);
    summary["total_over_volume"] = scaled.total_over_volume;
    summary["total_over_radius"] = scaled.total_over_radius;
    summary["small_vessel_share"] = scaled.small_vessel_share;
  }
  try {
    const auto fit = fit_exponential(h);
    summary["exp_fit"] = {{"rate_per_mm", fit.rate}, {"amplitude_mm", fit.amplitude},
                          {"r_squared", fit.r_squared}, {"degenerate", fit.degenerate}};
  } catch (const std::invalid_argument&) {
    summary["exp_fit"] = nullptr;
  }
  io::write_json(paths.quant_summary().string(), summary);
  log << "quantify: " << graph.segments.size() << " segments, total length " << h.total << " mm\n";
}

std::vector<std::vector<double>> read_csv_grid(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      row.push_back(cell == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

void stage_dceus(const PipelineConfig& c, const Paths& paths, std::ostream& log) {
  const PhantomSpec spec = load_phantom(c, paths);
  fs::create_directories(paths.root / "dceus");
  const IntensityMovie movie = movie_from_phantom(spec, c.dceus_plane, c.frame_interval, c.duration);
  const double noise = spec.bolus.noise_sd;
  ToaOptions topt;
  topt.use_filtered = c.toa_filtered;
  topt.lowpass_cutoff = c.lowpass_cutoff;
  const ParamMap toa = toa_map(movie, noise, topt);
  const ParamMap moi = moi_map(movie, c.lowpass_cutoff, noise);
  {
    std::ofstream os(paths.toa());
    write_param_map_csv(os, toa);
  }
  {
    std::ofstream os(paths.moi());
    write_param_map_csv(os, moi);
  }
  std::ofstream os(paths.dceus_summary());
  os << "moi_mean,moi_sd,toa_mean_s,toa_sd_s,perfused_regions,total_regions\n";
  os.precision(10);
  try {
    const auto sm = spatial_summary(moi), st = spatial_summary(toa);
    os << sm.mean << ',' << sm.sd << ',' << st.mean << ',' << st.sd << ',' << st.regions << ','
       << toa.rx * toa.ry << '\n';
    log << "dceus: MoI " << sm.mean << " +- " << sm.sd << ", TOA " << st.mean << " +- " << st.sd << " s\n";
  } catch (const std::invalid_argument&) {
    os << "nan,nan,nan,nan,0," << toa.rx * toa.ry << '\n';
    log << "dceus: no perfused region\n";
  }
}

void stage_report(const PipelineConfig& c, const Paths& paths, std::ostream& log) {
  require(paths.quant_summary(), exit_code::quantify);
  require(paths.histogram(), exit_code::quantify);
  require(paths.dceus_summary(), exit_code::dceus);
  require(paths.moi(), exit_code::dceus);
  const auto q = io::read_json(paths.quant_summary().string());

  // MoI per region grouped into three rings around the plane center.
  const auto grid = read_csv_grid(paths.moi());
  std::vector<std::vector<double>> rings(3);
  const double ry = static_cast<double>(grid.size()), rx = grid.empty() ? 0.0 : static_cast<double>(grid[0].size());
  const double rmax = 0.5 * std::hypot(rx, ry);
  for (std::size_t s = 0; s < grid.size(); ++s)
    for (std::size_t r = 0; r < grid[s].size(); ++r) {
      const double v = grid[s][r];
      if (std::isnan(v)) continue;
      const double d = std::hypot(r + 0.5 - 0.5 * rx, s + 0.5 - 0.5 * ry) / rmax;
      rings[std::min<std::size_t>(2, static_cast<std::size_t>(d * 3.0))].push_back(v);
    }

  std::ostringstream os;
  os.precision(10);
  os << "key,value\n";
  os << "segments," << q.at("segments").get<int>() << '\n';
  os << "total_length_mm," << q.at("total_length_mm").get<double>() << '\n';
  if (q.contains("small_vessel_share")) os << "small_vessel_share," << q.at("small_vessel_share").get<double>() << '\n';
  if (q.contains("total_over_volume")) os << "total_over_volume_per_mm2," << q.at("total_over_volume").get<double>() << '\n';
  if (q.contains("total_over_radius")) os << "total_over_radius," << q.at("total_over_radius").get<double>() << '\n';
  if (!q.at("exp_fit").is_null()) os << "exp_fit_r_squared," << q.at("exp_fit").at("r_squared").get<double>() << '\n';
  {
    std::ifstream is(paths.dceus_summary());
    std::string header, values;
    std::getline(is, header);
    std::getline(is, values);
    std::stringstream hs(header), vs(values);
    std::string k, v;
    while (std::getline(hs, k, ',') && std::getline(vs, v, ',')) os << "dceus_" << k << ',' << v << '\n';
  }
  std::vector<std::vector<double>> usable;
  for (const auto& r : rings)
    if (r.size() >= 2) usable.push_back(r);
  if (usable.size() >= 2) {
    try {
      const auto a = stats::one_way_anova(usable);
      os << "moi_ring_anova_f," << a.f << "\nmoi_ring_anova_p," << a.p << '\n';
      const auto t = stats::t_test(usable.front(), usable.back());
      os << "moi_inner_vs_outer_welch_t," << t.t << "\nmoi_inner_vs_outer_p," << t.p
         << "\nmoi_inner_vs_outer_significant," << (t.significant ? 1 : 0) << '\n';
    } catch (const std::invalid_argument& e) {
      os << "moi_ring_stats,unavailable\n";
    }
  }
  write_text(paths.report(), os.str());
  (void)c;
  log << "report: written " << paths.report().string() << '\n';
}

}  // namespace

void run(Stage stage, PipelineConfig config, const RunOptions& options, std::ostream& log) {
  if (options.output_dir) config.output_dir = *options.output_dir;
  if (options.seed_override) config.rng_seed = *options.seed_override;
  const Paths paths{fs::path(config.output_dir)};
  const int workers = std::max(1, options.workers);

  auto guarded = [&](Stage s, auto&& fn) {
    try {
      fn();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage_exit_code(s), stage_name(s) + ": " + e.what());
    }
  };
  auto one = [&](Stage s) {
    switch (s) {
      case Stage::phantom: guarded(s, [&] { stage_phantom(config, paths, log); }); break;
      case Stage::scan: guarded(s, [&] { stage_scan(config, paths, workers, log); }); break;
      case Stage::reconstruct: guarded(s, [&] { stage_reconstruct(config, paths, workers, log); }); break;
      case Stage::quantify: guarded(s, [&] { stage_quantify(config, paths, log); }); break;
      case Stage::dceus: guarded(s, [&] { stage_dceus(config, paths, log); }); break;
      case Stage::report: guarded(s, [&] { stage_report(config, paths, log); }); break;
      case Stage::all: break;
    }
  };
  fs::create_directories(paths.root);
  if (stage == Stage::all) {
    for (Stage s : {Stage::phantom, Stage::scan, Stage::reconstruct, Stage::quantify, Stage::dceus,
                    Stage::report})
      one(s);
  } else {
    one(stage);
  }
}

int run_main(Stage stage, const std::string& config_path, const RunOptions& options,
             std::ostream& log, std::ostream& err) {
  try {
    run(stage, load_config(config_path), options, log);
    return exit_code::ok;
  } catch (const StageError& e) {
    err << "error: " << e.what() << '\n';
    return e.code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return stage_exit_code(stage);
  }
}

}  // namespace ufdt::pipeline
