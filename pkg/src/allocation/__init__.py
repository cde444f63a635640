"""Alpha-fairness math, feasible-set geometry and reward bookkeeping."""