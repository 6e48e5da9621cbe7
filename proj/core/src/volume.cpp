// Copyright 2026 the planereg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "planereg/volume.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "planereg/errors.hpp"

namespace planereg {

void Volume::allocate(float fill) {
  meta.validate();
  voxels.assign(meta.voxel_count(), fill);
}

namespace {

// Resolves one axis of a trilinear lookup: base index and fraction, with the
// top voxel center reachable via fraction 1.  Returns false outside support.
bool axis_coord(double x, int dim, int& i0, double& f) {
  if (!(x >= 0.0 && x <= static_cast<double>(dim - 1))) return false;
  i0 = static_cast<int>(std::floor(x));
  f = x - i0;
  if (i0 == dim - 1) {
    i0 = dim - 2;
    f = 1.0;
  }
  return true;
}

}  // namespace

double sample_trilinear(const Volume& v, const Vec3& world, double fill) {
  const Vec3 g = v.meta.world_to_voxel(world);
  int i0, j0, k0;
  double fx, fy, fz;
  if (!axis_coord(g.x, v.meta.dims[0], i0, fx) || !axis_coord(g.y, v.meta.dims[1], j0, fy) ||
      !axis_coord(g.z, v.meta.dims[2], k0, fz)) {
    return fill;
  }
  const double c000 = v.at(i0, j0, k0), c100 = v.at(i0 + 1, j0, k0);
  const double c010 = v.at(i0, j0 + 1, k0), c110 = v.at(i0 + 1, j0 + 1, k0);
  const double c001 = v.at(i0, j0, k0 + 1), c101 = v.at(i0 + 1, j0, k0 + 1);
  const double c011 = v.at(i0, j0 + 1, k0 + 1), c111 = v.at(i0 + 1, j0 + 1, k0 + 1);
  const double c00 = c000 + fx * (c100 - c000);
  const double c10 = c010 + fx * (c110 - c010);
  const double c01 = c001 + fx * (c101 - c001);
  const double c11 = c011 + fx * (c111 - c011);
  const double c0 = c00 + fy * (c10 - c00);
  const double c1 = c01 + fy * (c11 - c01);
  return c0 + fz * (c1 - c0);
}

std::vector<double> sample_plane(const Volume& v, const Plane& plane, int n_u, int n_v,
                                 double du_mm, double dv_mm, double fill) {
  if (n_u < 1 || n_v < 1) throw DataError("sample_plane: grid dims must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(n_u) * n_v);
  const double u0 = -0.5 * (n_u - 1) * du_mm;
  const double v0 = -0.5 * (n_v - 1) * dv_mm;
  for (int jv = 0; jv < n_v; ++jv) {
    for (int iu = 0; iu < n_u; ++iu) {
      const Vec3 p = plane.center() + plane.e_u() * (u0 + iu * du_mm) +
                     plane.e_v() * (v0 + jv * dv_mm);
      out[static_cast<std::size_t>(jv) * n_u + iu] = sample_trilinear(v, p, fill);
    }
  }
  return out;
}

void write_volume(const std::string& base_path, const Volume& v, BodyRegion region) {
  v.meta.validate();
  if (v.voxels.size() != v.meta.voxel_count()) {
    throw DataError("write_volume: voxel buffer does not match dims");
  }
  {
    std::ofstream raw(base_path + ".raw", std::ios::binary);
    if (!raw) throw DataError("write_volume: cannot open " + base_path + ".raw");
    raw.write(reinterpret_cast<const char*>(v.voxels.data()),
              static_cast<std::streamsize>(v.voxels.size() * sizeof(float)));
    if (!raw) throw DataError("write_volume: short write to " + base_path + ".raw");
  }
  std::ofstream txt(base_path + ".txt");
  if (!txt) throw DataError("write_volume: cannot open " + base_path + ".txt");
  txt << "dims = " << v.meta.dims[0] << ' ' << v.meta.dims[1] << ' ' << v.meta.dims[2] << '\n';
  txt.precision(17);
  txt << "spacing_mm = " << v.meta.spacing.x << ' ' << v.meta.spacing.y << ' '
      << v.meta.spacing.z << '\n';
  txt << "region = " << to_string(region) << '\n';
  if (!txt) throw DataError("write_volume: short write to " + base_path + ".txt");
}

StoredVolume read_volume(const std::string& base_path) {
  std::ifstream txt(base_path + ".txt");
  if (!txt) throw DataError("read_volume: cannot open " + base_path + ".txt");
  StoredVolume out;
  bool have_dims = false, have_spacing = false, have_region = false;
  std::string line;
  while (std::getline(txt, line)) {
    std::istringstream ls(line);
    std::string key, eq;
    if (!(ls >> key)) continue;  // blank line
    if (!(ls >> eq) || eq != "=") throw DataError("read_volume: malformed sidecar line: " + line);
    if (key == "dims") {
      if (!(ls >> out.volume.meta.dims[0] >> out.volume.meta.dims[1] >> out.volume.meta.dims[2]))
        throw DataError("read_volume: bad dims line");
      have_dims = true;
    } else if (key == "spacing_mm") {
      if (!(ls >> out.volume.meta.spacing.x >> out.volume.meta.spacing.y >>
            out.volume.meta.spacing.z))
        throw DataError("read_volume: bad spacing_mm line");
      have_spacing = true;
    } else if (key == "region") {
      std::string name;
      if (!(ls >> name)) throw DataError("read_volume: bad region line");
      out.region = region_from_string(name);
      have_region = true;
    } else {
      throw DataError("read_volume: unknown sidecar key: " + key);
    }
  }
  if (!have_dims || !have_spacing || !have_region) {
    throw DataError("read_volume: sidecar missing dims/spacing_mm/region");
  }
  out.volume.meta.validate();

  std::ifstream raw(base_path + ".raw", std::ios::binary);
  if (!raw) throw DataError("read_volume: cannot open " + base_path + ".raw");
  out.volume.voxels.resize(out.volume.meta.voxel_count());
  raw.read(reinterpret_cast<char*>(out.volume.voxels.data()),
           static_cast<std::streamsize>(out.volume.voxels.size() * sizeof(float)));
  if (raw.gcount() !=
      static_cast<std::streamsize>(out.volume.voxels.size() * sizeof(float))) {
    throw DataError("read_volume: raw file size does not match sidecar dims");
  }
  char extra;
  if (raw.read(&extra, 1)) {
    throw DataError("read_volume: raw file larger than sidecar dims");
  }
  return out;
}

}  // namespace planereg
