#pragma once

#include "fkwide/errors.hpp"
#include "fkwide/core.hpp"
#include "fkwide/kinematics.hpp"
#include "fkwide/interp.hpp"
#include "fkwide/parallel.hpp"
#include "fkwide/sparse.hpp"
#include "fkwide/schemes.hpp"
#include "fkwide/lisl.hpp"
#include "fkwide/solver.hpp"
#include "fkwide/analysis.hpp"
#include "fkwide/study.hpp"
