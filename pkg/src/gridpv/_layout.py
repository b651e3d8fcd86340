"""Index maps for the flat arrays passed to the stepping kernel.

The compiled kernel hard-codes the same indices; ``tests/test_kernel.py``
checks the two stay in sync.
"""

# state vector
X_VDC, X_IB, X_VPV = 0, 1, 2
X_IVSC = 3  # 3..5
X_IG = 6  # 6..8
X_VCF = 9  # 9..11
X_IDC = 12
X_VP = 13  # 13..15, PCC phase voltages
X_LEG = 16  # 16..18
X_ILOSS, X_PERR, X_MASUM, X_MAIDX = 19, 20, 21, 22
X_DUTY, X_VREF = 23, 24
X_IREF = 25  # 25..27
X_IL = 28  # 28..30
X_NDONE, X_FAULT, X_VT = 31, 32, 33
NX = 34

# parameter vector
P_DT, P_CTRL, P_LB, P_CPV, P_CDC, P_L, P_R, P_LS, P_RF, P_CF = range(10)
P_VPK, P_OMEGA, P_RLOAD, P_LDC, P_DISPH, P_DISON, P_DISOFF = range(10, 17)
P_KP, P_KI, P_BAND, P_ILIM, P_MALEN, P_CDV, P_VFLOOR, P_VDCMIN, P_IFAULT, P_FFMODE = range(17, 27)
NP = 27

# fault codes
OK, FAULT_DC, FAULT_OVERCURRENT, FAULT_GRID_LOSS, FAULT_NONFINITE = range(5)
FAULT_TEXT = {
    FAULT_DC: "DC link collapsed",
    FAULT_OVERCURRENT: "VSC overcurrent",
    FAULT_GRID_LOSS: "PCC voltage below dead-voltage floor",
    FAULT_NONFINITE: "non-finite plant state",
}

# trace channels, in CSV column order
CHANNELS = (
    "t",
    "v_g_a", "v_g_b", "v_g_c",
    "i_g_a", "i_g_b", "i_g_c",
    "i_load_a", "i_load_b", "i_load_c",
    "i_vsc_a", "i_vsc_b", "i_vsc_c",
    "i_gref_a", "i_gref_b", "i_gref_c",
    "v_dc", "v_dcref", "p_pv", "i_pv", "v_pv", "p_g", "q_g", "duty", "irradiance",
    "p_load", "p_loss",
)
NCH = len(CHANNELS)
C = {name: k for k, name in enumerate(CHANNELS)}
