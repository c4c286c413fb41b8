var t = typeof /re/; // keyword before regex
print(t);
