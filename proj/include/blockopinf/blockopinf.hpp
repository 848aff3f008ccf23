#pragma once

#include "blockopinf/binary_io.hpp"
#include "blockopinf/csv.hpp"
#include "blockopinf/error.hpp"
#include "blockopinf/flutter.hpp"
#include "blockopinf/fomsim.hpp"
#include "blockopinf/ode.hpp"
#include "blockopinf/operators.hpp"
#include "blockopinf/opinf.hpp"
#include "blockopinf/pod.hpp"
#include "blockopinf/regsearch.hpp"
#include "blockopinf/rom.hpp"
#include "blockopinf/snapshots.hpp"
#include "blockopinf/tensorkit.hpp"
