#pragma once

#include "stmesh/slab_mesh.hpp"
#include "stmesh/spatial_mesh.hpp"

#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace stmesh {

using NamedFields = std::map<std::string, std::vector<double>>;

namespace detail {

inline void write_vtk_header(std::ostream& out, const std::string& comment)
{
    out << "# vtk DataFile Version 3.0\n" << comment << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
}

inline void write_point_data(std::ostream& out, const NamedFields& fields, int node_count)
{
    if (fields.empty())
        return;
    out << "POINT_DATA " << node_count << "\n";
    for (const auto& [name, values] : fields) {
        if (static_cast<int>(values.size()) != node_count)
            throw std::invalid_argument("field '" + name + "' length does not match node count");
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (double v : values)
            out << v << "\n";
    }
}

}  // namespace detail

inline void export_vtk(const SpatialMesh& mesh, const NamedFields& fields, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out.precision(16);
    detail::write_vtk_header(out, "spatial mesh");
    out << "POINTS " << mesh.node_count() << " double\n";
    for (int i = 0; i < mesh.node_count(); ++i) {
        out << mesh.coord(i, 0) << " " << mesh.coord(i, 1) << " "
            << (mesh.dim == 3 ? mesh.coord(i, 2) : 0.0) << "\n";
    }
    const int nv = mesh.dim + 1;
    out << "CELLS " << mesh.element_count() << " " << mesh.element_count() * (nv + 1) << "\n";
    for (int e = 0; e < mesh.element_count(); ++e) {
        out << nv;
        for (int i = 0; i < nv; ++i)
            out << " " << mesh.element(e)[i];
        out << "\n";
    }
    out << "CELL_TYPES " << mesh.element_count() << "\n";
    for (int e = 0; e < mesh.element_count(); ++e)
        out << (mesh.dim == 2 ? 5 : 10) << "\n";
    detail::write_point_data(out, fields, mesh.node_count());
}

/// Space-time slabs over 2D space export directly as tetrahedra in (x, y, t).
/// Pentatope meshes have no VTK cell type; with project_4d set, the spatial
/// projection is written with time as a nodal scalar and each pentatope
/// expanded into its 5 tetrahedral facets (stated in the file comment line).
inline void export_vtk(const SpaceTimeSlabMesh& mesh, NamedFields fields, const std::string& path,
                       bool project_4d = false)
{
    if (mesh.dim_st == 4 && !project_4d)
        throw std::invalid_argument("pentatope meshes require the 4D projection mode");

    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out.precision(16);

    if (mesh.dim_st == 3) {
        detail::write_vtk_header(out, "space-time slab (x, y, t)");
        out << "POINTS " << mesh.node_count() << " double\n";
        for (int i = 0; i < mesh.node_count(); ++i)
            out << mesh.coord(i, 0) << " " << mesh.coord(i, 1) << " " << mesh.coord(i, 2) << "\n";
        out << "CELLS " << mesh.simplex_count() << " " << mesh.simplex_count() * 5 << "\n";
        for (int e = 0; e < mesh.simplex_count(); ++e) {
            out << 4;
            for (int i = 0; i < 4; ++i)
                out << " " << mesh.simplex(e)[i];
            out << "\n";
        }
        out << "CELL_TYPES " << mesh.simplex_count() << "\n";
        for (int e = 0; e < mesh.simplex_count(); ++e)
            out << 10 << "\n";
        detail::write_point_data(out, fields, mesh.node_count());
        return;
    }

    detail::write_vtk_header(out, "pentatope slab projected to (x, y, z); time in point data; "
                                  "cells are pentatope facets");
    out << "POINTS " << mesh.node_count() << " double\n";
    std::vector<double> times(mesh.node_count());
    for (int i = 0; i < mesh.node_count(); ++i) {
        out << mesh.coord(i, 0) << " " << mesh.coord(i, 1) << " " << mesh.coord(i, 2) << "\n";
        times[i] = mesh.coord(i, 3);
    }
    const int ncells = mesh.simplex_count() * 5;
    out << "CELLS " << ncells << " " << ncells * 5 << "\n";
    for (int e = 0; e < mesh.simplex_count(); ++e) {
        const int* s = mesh.simplex(e);
        for (int drop = 0; drop < 5; ++drop) {
            out << 4;
            for (int i = 0; i < 5; ++i)
                if (i != drop)
                    out << " " << s[i];
            out << "\n";
        }
    }
    out << "CELL_TYPES " << ncells << "\n";
    for (int c = 0; c < ncells; ++c)
        out << 10 << "\n";
    fields["time"] = std::move(times);
    detail::write_point_data(out, fields, mesh.node_count());
}

}  // namespace stmesh
