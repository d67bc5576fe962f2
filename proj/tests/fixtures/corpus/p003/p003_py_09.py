s = list(input())
a = s[:]
a.reverse()
print(["No", "Yes"][a == s])
