(* if h then x := any int; if x >= low then return x else return low
   else x := low; while nondet-bool do x++ done; return x.
   State starts after the initial choice; b = still running. *)
name tiGni;
vars b : bool, x, high : bool, low;
outputs x;
final !b;
trans
  high and b and (x >= low and !b' and x' = x or x < low and !b' and x' = low) or
  !high and b and (b' and x' = x + 1 or !b' and x' = x) or
  !b and !b' and x' = x;
branches 2:
  high and b and (x >= low and !b'1 and x'1 = x and !b'2 and x'2 = x or
                  x < low and !b'1 and x'1 = low and !b'2 and x'2 = low) or
  !high and b and b'1 and x'1 = x + 1 and !b'2 and x'2 = x or
  !b and !b'1 and x'1 = x and !b'2 and x'2 = x;
