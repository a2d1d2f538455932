#include "harmlab/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <utility>

#include "harmlab/error.hpp"
#include "json_doc.hpp"

namespace harmlab::detail {

json readDocument(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open " + path + " for reading");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, path + ": " + e.what());
  }
  return doc;
}

void writeText(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot open " + path + " for writing");
  out << body;
  out.flush();
  require(out.good(), ErrorKind::Io, "write to " + path + " failed");
}

void writeDocument(const json& doc, const std::string& path) {
  writeText(path, doc.dump(2) + "\n");
}

void checkKeys(const json& doc, const std::vector<std::string>& allowed,
               const std::string& context) {
  require(doc.is_object(), ErrorKind::Config, context + ": expected an object");
  for (const auto& item : doc.items()) {
    bool known = false;
    for (const auto& key : allowed) known = known || key == item.key();
    require(known, ErrorKind::Config,
            context + ": unknown key \"" + item.key() + "\"");
  }
}

const json& field(const json& doc, const std::string& key,
                  const std::string& context) {
  const auto it = doc.find(key);
  require(it != doc.end(), ErrorKind::Config,
          context + ": missing key \"" + key + "\"");
  return *it;
}

double numberField(const json& doc, const std::string& key,
                   const std::string& context) {
  const json& v = field(doc, key, context);
  require(v.is_number(), ErrorKind::Config,
          context + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

int intField(const json& doc, const std::string& key,
             const std::string& context) {
  const json& v = field(doc, key, context);
  require(v.is_number_integer(), ErrorKind::Config,
          context + ": \"" + key + "\" must be an integer");
  return v.get<int>();
}

void checkVersion(const json& doc, const std::string& context) {
  require(intField(doc, "version", context) == 1, ErrorKind::Config,
          context + ": unsupported document version");
}

json pointRecord(const TargetPoint& p) {
  json rec;
  if (const auto* e = std::get_if<EuclideanPoint>(&p)) {
    rec["kind"] = "euclidean";
    rec["x"] = e->x;
  } else if (const auto* h = std::get_if<HyperbolicPoint>(&p)) {
    rec["kind"] = "hyperbolic";
    rec["x"] = std::vector<double>(h->x.begin(), h->x.end());
  } else {
    const auto& t = std::get<TreePoint>(p);
    rec["kind"] = "tree";
    rec["edge"] = t.edge;
    rec["offset"] = t.offset;
  }
  return rec;
}

TargetPoint parsePoint(const json& rec, const std::string& context) {
  const json& kind = field(rec, "kind", context);
  require(kind.is_string(), ErrorKind::Config,
          context + ": point \"kind\" must be a string");
  const std::string name = kind.get<std::string>();
  if (name == "euclidean") {
    checkKeys(rec, {"kind", "x"}, context);
    EuclideanPoint p;
    p.x = field(rec, "x", context).get<std::vector<double>>();
    return p;
  }
  if (name == "hyperbolic") {
    checkKeys(rec, {"kind", "x"}, context);
    const auto coords = field(rec, "x", context).get<std::vector<double>>();
    require(coords.size() == 3, ErrorKind::Config,
            context + ": hyperbolic points carry three coordinates");
    HyperbolicPoint p;
    std::copy(coords.begin(), coords.end(), p.x.begin());
    return p;
  }
  if (name == "tree") {
    checkKeys(rec, {"kind", "edge", "offset"}, context);
    TreePoint p;
    p.edge = intField(rec, "edge", context);
    p.offset = numberField(rec, "offset", context);
    return p;
  }
  fail(ErrorKind::Config, context + ": unknown point kind \"" + name + "\"");
}

json targetRecord(const NpcTarget& target) {
  json doc;
  doc["version"] = 1;
  switch (target.kind()) {
    case NpcTarget::Kind::Euclidean:
      doc["kind"] = "euclidean";
      doc["dimension"] = target.euclideanDim();
      break;
    case NpcTarget::Kind::Hyperbolic:
      doc["kind"] = "hyperbolic_plane";
      break;
    case NpcTarget::Kind::Tree: {
      doc["kind"] = "metric_tree";
      const MetricTree& tree = target.treeData();
      doc["nodes"] = tree.nodeCount;
      json edges = json::array();
      for (std::size_t e = 0; e < tree.edges.size(); ++e) {
        json rec;
        rec["id"] = static_cast<int>(e);
        rec["a"] = tree.edges[e].a;
        rec["b"] = tree.edges[e].b;
        rec["length"] = tree.edges[e].length;
        edges.push_back(std::move(rec));
      }
      doc["edges"] = std::move(edges);
      break;
    }
  }
  return doc;
}

NpcTarget parseTarget(const json& doc, const std::string& context) {
  checkVersion(doc, context);
  const json& kind = field(doc, "kind", context);
  require(kind.is_string(), ErrorKind::Config,
          context + ": target \"kind\" must be a string");
  const std::string name = kind.get<std::string>();
  if (name == "euclidean") {
    checkKeys(doc, {"version", "kind", "dimension"}, context);
    return NpcTarget::euclidean(intField(doc, "dimension", context));
  }
  if (name == "hyperbolic_plane") {
    checkKeys(doc, {"version", "kind"}, context);
    return NpcTarget::hyperbolicPlane();
  }
  if (name == "metric_tree") {
    checkKeys(doc, {"version", "kind", "nodes", "edges"}, context);
    MetricTree tree;
    tree.nodeCount = intField(doc, "nodes", context);
    const json& edges = field(doc, "edges", context);
    require(edges.is_array(), ErrorKind::Config,
            context + ": \"edges\" must be an array");
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const json& rec = edges[e];
      checkKeys(rec, {"id", "a", "b", "length"}, context);
      require(intField(rec, "id", context) == static_cast<int>(e),
              ErrorKind::Config,
              context + ": edge ids must run 0..edges-1 in order");
      MetricTree::TreeEdge edge;
      edge.a = intField(rec, "a", context);
      edge.b = intField(rec, "b", context);
      edge.length = numberField(rec, "length", context);
      tree.edges.push_back(edge);
    }
    tree.finalize();
    return NpcTarget::tree(std::move(tree));
  }
  fail(ErrorKind::Config, context + ": unknown target kind \"" + name + "\"");
}

}  // namespace harmlab::detail

namespace harmlab {

using detail::json;
using namespace detail;

std::string formatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void saveMesh(const DomainMesh& mesh, const std::string& path) {
  json doc;
  doc["version"] = 1;
  doc["dimension"] = mesh.dimension;
  if (mesh.curvature.isBounded()) {
    doc["curvature_bound"] = *mesh.curvature.k;
  } else {
    doc["curvature_bound"] = "unbounded-below";
  }
  if (mesh.cone) {
    json chart;
    chart["total_angle"] = mesh.cone->totalAngle;
    chart["radius"] = mesh.cone->radius;
    chart["refinement_level"] = mesh.cone->refinementLevel;
    chart["base_rings"] = mesh.cone->baseRings;
    doc["cone"] = std::move(chart);
  }
  json vertices = json::array();
  for (const ConePoint& p : mesh.vertices) {
    vertices.push_back(json::array({p.r, p.phi}));
  }
  doc["vertices"] = std::move(vertices);
  json edges = json::array();
  for (const DomainMesh::Edge& e : mesh.edges) {
    edges.push_back(json::array({e.i, e.j, e.weight, e.length}));
  }
  doc["edges"] = std::move(edges);
  json triangles = json::array();
  for (const DomainMesh::Triangle& t : mesh.triangles) {
    triangles.push_back(json::array({t.a, t.b, t.c}));
  }
  doc["triangles"] = std::move(triangles);
  doc["measures"] = mesh.measures;
  json boundary = json::array();
  for (int v = 0; v < mesh.vertexCount(); ++v) {
    if (mesh.boundaryFlags[v]) boundary.push_back(v);
  }
  doc["boundary"] = std::move(boundary);
  writeDocument(doc, path);
}

DomainMesh loadMesh(const std::string& path) {
  const json doc = readDocument(path);
  checkKeys(doc,
            {"version", "dimension", "curvature_bound", "cone", "vertices",
             "edges", "triangles", "measures", "boundary"},
            path);
  checkVersion(doc, path);

  DomainMesh mesh;
  mesh.dimension = intField(doc, "dimension", path);
  const json& bound = field(doc, "curvature_bound", path);
  if (bound.is_string()) {
    require(bound.get<std::string>() == "unbounded-below", ErrorKind::Config,
            path + ": curvature_bound must be a number or \"unbounded-below\"");
    mesh.curvature = CurvatureBound::unboundedBelow();
  } else {
    require(bound.is_number(), ErrorKind::Config,
            path + ": curvature_bound must be a number or \"unbounded-below\"");
    mesh.curvature = CurvatureBound::bounded(bound.get<double>());
  }
  if (doc.contains("cone")) {
    const json& chart = doc["cone"];
    checkKeys(chart,
              {"total_angle", "radius", "refinement_level", "base_rings"},
              path);
    ConeSpec spec;
    spec.totalAngle = numberField(chart, "total_angle", path);
    spec.radius = numberField(chart, "radius", path);
    spec.refinementLevel = intField(chart, "refinement_level", path);
    spec.baseRings = intField(chart, "base_rings", path);
    mesh.cone = spec;
  }

  for (const json& rec : field(doc, "vertices", path)) {
    require(rec.is_array() && rec.size() == 2, ErrorKind::Config,
            path + ": vertices must be [r, phi] pairs");
    mesh.vertices.push_back(ConePoint{rec[0].get<double>(),
                                      rec[1].get<double>()});
  }
  for (const json& rec : field(doc, "edges", path)) {
    require(rec.is_array() && rec.size() == 4, ErrorKind::Config,
            path + ": edges must be [i, j, weight, length] rows");
    DomainMesh::Edge e;
    e.i = rec[0].get<int>();
    e.j = rec[1].get<int>();
    e.weight = rec[2].get<double>();
    e.length = rec[3].get<double>();
    mesh.edges.push_back(e);
  }
  for (const json& rec : field(doc, "triangles", path)) {
    require(rec.is_array() && rec.size() == 3, ErrorKind::Config,
            path + ": triangles must be [a, b, c] rows");
    mesh.triangles.push_back(DomainMesh::Triangle{
        rec[0].get<int>(), rec[1].get<int>(), rec[2].get<int>()});
  }
  mesh.measures = field(doc, "measures", path).get<std::vector<double>>();
  mesh.boundaryFlags.assign(mesh.vertices.size(), 0);
  for (const json& rec : field(doc, "boundary", path)) {
    require(rec.is_number_integer(), ErrorKind::Config,
            path + ": boundary must list vertex indices");
    const int v = rec.get<int>();
    require(v >= 0 && v < mesh.vertexCount(), ErrorKind::Config,
            path + ": boundary index out of range");
    mesh.boundaryFlags[v] = 1;
  }
  mesh.finalize();
  return mesh;
}

void saveTarget(const NpcTarget& target, const std::string& path) {
  writeDocument(targetRecord(target), path);
}

NpcTarget loadTarget(const std::string& path) {
  return parseTarget(readDocument(path), path);
}

void saveMap(const MapState& map, const std::string& path) {
  require(map.domain != nullptr, ErrorKind::Inconsistency,
          "map is not bound to a mesh");
  json doc;
  doc["version"] = 1;
  doc["target"] = targetRecord(map.target);
  json values = json::array();
  for (const TargetPoint& p : map.values) values.push_back(pointRecord(p));
  doc["values"] = std::move(values);
  writeDocument(doc, path);
}

MapState loadMap(const DomainMesh& mesh, const std::string& path) {
  const json doc = readDocument(path);
  checkKeys(doc, {"version", "target", "values"}, path);
  checkVersion(doc, path);
  NpcTarget target = parseTarget(field(doc, "target", path), path);
  const json& records = field(doc, "values", path);
  require(records.is_array(), ErrorKind::Config,
          path + ": \"values\" must be an array");
  require(static_cast<int>(records.size()) == mesh.vertexCount(),
          ErrorKind::Inconsistency,
          path + ": value count does not match the mesh");
  std::vector<TargetPoint> values;
  values.reserve(records.size());
  for (const json& rec : records) values.push_back(parsePoint(rec, path));
  return MapState(mesh, std::move(target), std::move(values));
}

void writeDensityCsv(const DomainMesh& mesh, const EnergyDensityField& field,
                     const std::string& path) {
  require(field.density.size() == mesh.vertices.size(),
          ErrorKind::Inconsistency, "density field does not match the mesh");
  std::ostringstream body;
  body << "vertex_index,r,phi,density,tag\n";
  for (std::size_t v = 0; v < field.density.size(); ++v) {
    const char* tag = "graph";
    if (field.epsilon) {
      tag = field.ballTouchesBoundary[v] ? "clipped" : "interior";
    }
    body << v << ',' << formatDouble(mesh.vertices[v].r) << ','
         << formatDouble(mesh.vertices[v].phi) << ','
         << formatDouble(field.density[v]) << ',' << tag << '\n';
  }
  writeText(path, body.str());
}

void writeEnergyTraceCsv(const SolverReport& report, const std::string& path) {
  require(!report.energyTrace.empty(), ErrorKind::DegenerateInput,
          "report carries no energy trace");
  require(report.displacementTrace.size() == report.energyTrace.size(),
          ErrorKind::Inconsistency, "trace arrays disagree in length");
  std::ostringstream body;
  body << "iteration,energy,displacement\n";
  for (std::size_t i = 0; i < report.energyTrace.size(); ++i) {
    body << (i + 1) << ',' << formatDouble(report.energyTrace[i]) << ','
         << formatDouble(report.displacementTrace[i]) << '\n';
  }
  writeText(path, body.str());
}

void writeRegularityCsv(const DomainMesh& mesh,
                        const std::vector<int>& vertices,
                        const std::vector<double>& lipschitz,
                        const std::vector<double>& density,
                        const std::vector<double>& ratios,
                        const std::string& path) {
  require(vertices.size() == lipschitz.size() &&
              vertices.size() == density.size() &&
              vertices.size() == ratios.size(),
          ErrorKind::Inconsistency, "report columns disagree in length");
  std::ostringstream body;
  body << "vertex,r,phi,lip,density,ratio\n";
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const int v = vertices[i];
    require(v >= 0 && v < mesh.vertexCount(), ErrorKind::Inconsistency,
            "report vertex outside the mesh");
    body << v << ',' << formatDouble(mesh.vertices[v].r) << ','
         << formatDouble(mesh.vertices[v].phi) << ','
         << formatDouble(lipschitz[i]) << ',' << formatDouble(density[i])
         << ',' << formatDouble(ratios[i]) << '\n';
  }
  writeText(path, body.str());
}

void writeHopfLaxCsv(const HopfLaxField& field, const std::string& path) {
  std::ostringstream body;
  body << "vertex,lambda,f,L,argmin_size\n";
  for (std::size_t row = 0; row < field.inner.size(); ++row) {
    for (std::size_t col = 0; col < field.lambdaGrid.size(); ++col) {
      const std::size_t cell = field.cell(row, col);
      body << field.inner[row] << ',' << formatDouble(field.lambdaGrid[col])
           << ',' << formatDouble(field.values[cell]) << ','
           << formatDouble(field.argminDistance[cell]) << ','
           << field.argminSets[cell].size() << '\n';
    }
  }
  writeText(path, body.str());
}

}  // namespace harmlab
