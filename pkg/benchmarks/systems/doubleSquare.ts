(* summation loop of doubleSquare: state after the initial branch on h;
   the h flag and input x never change, y accumulates, z counts down *)
name doubleSquare;
vars x, y, z, h : bool;
final z <= 0;
trans
  z > 0 and z' = z - 1 and y' = y + x or
  z <= 0 and z' = z and y' = y;
