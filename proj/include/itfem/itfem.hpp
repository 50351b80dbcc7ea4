#pragma once

#include "itfem/common.hpp"
#include "itfem/levelset.hpp"
#include "itfem/reference_element.hpp"
#include "itfem/quadrature.hpp"
#include "itfem/mesh.hpp"
#include "itfem/discrete_levelset.hpp"
#include "itfem/iso_mapping.hpp"
#include "itfem/cut_geometry.hpp"
#include "itfem/sparse.hpp"
#include "itfem/assembly.hpp"
#include "itfem/solver.hpp"
#include "itfem/error_metrics.hpp"
#include "itfem/io.hpp"
#include "itfem/study.hpp"
