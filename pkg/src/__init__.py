# fisherbound - moment-based Fisher information bounds for nonlinear measurement systems
